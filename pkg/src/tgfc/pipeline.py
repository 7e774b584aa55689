"""End-to-end single-image encode/decode across both branches.

Encoder: extract features, select channels, serialize the feature container,
downsample and compress the texture.  Decoder: rebuild kept channels, fill
the rest from texture features, restore, classify; optionally fuse texture
and features into the preview image.  Rate accounting here is exact: the
reported bits equal the byte length of the two written streams times eight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backbone import SplitBackbone, TaskResult
from .codec import (
    CodecBackend,
    RequantBackend,
    RateBreakdown,
    decode_container,
    decode_texture,
    encode_container,
    encode_texture,
    parse_container,
)
from .data import downscale
from .datamodel import ChannelMask, ConfigurationError, FeatureTensor, SourceImage
from .restoration import Frm, fill_missing, reconstruct
from .selection import ChannelScorer, GumbelConfig, select_channels, select_channels_argmax
from .upscaler import Irnn, irnn_forward

__all__ = [
    "PipelineConfig",
    "EncodeResult",
    "DecodeResult",
    "texture_backend_for",
    "texture_roundtrip",
    "encode_image",
    "decode_image",
    "encode_feature_anchor",
    "encode_image_anchor",
]


@dataclass(frozen=True)
class PipelineConfig:
    texture_scale: int = 2
    texture_quality: int = 24
    selection: str = "argmax"
    selection_seed: int = 0

    def __post_init__(self) -> None:
        if self.texture_scale < 1:
            raise ConfigurationError(f"texture_scale must be >= 1, got {self.texture_scale}")
        if self.texture_quality < 1:
            raise ConfigurationError(f"texture_quality must be >= 1, got {self.texture_quality}")
        if self.selection not in ("argmax", "gumbel"):
            raise ConfigurationError(f"selection must be 'argmax' or 'gumbel', got {self.selection!r}")


@dataclass(frozen=True)
class EncodeResult:
    feature_stream: bytes
    texture_stream: bytes
    mask: ChannelMask
    rate: RateBreakdown


@dataclass(frozen=True)
class DecodeResult:
    task: TaskResult
    f_hat: FeatureTensor
    mask: ChannelMask
    texture: SourceImage
    preview: SourceImage | None


def texture_backend_for(quality: int) -> RequantBackend:
    """Built-in lossy backend; larger quality step = coarser texture."""
    return RequantBackend(step=quality)


def texture_roundtrip(img: SourceImage, scale: int, quality: int) -> SourceImage:
    """What the decoder will see as the texture: downsample, compress, decode."""
    backend = texture_backend_for(quality)
    blob = encode_texture(downscale(img, scale), backend)
    return decode_texture(blob, {backend.codec_id: backend})


def _breakdown(feature_stream: bytes, texture_stream: bytes,
               img_h: int, img_w: int) -> RateBreakdown:
    _, _, _, _, payload = parse_container(feature_stream)
    payload_bits = len(payload) * 8
    side_bits = (len(feature_stream) - len(payload)) * 8
    return RateBreakdown(payload_bits, side_bits, len(texture_stream) * 8, img_h, img_w)


def encode_image(img: SourceImage, backbone: SplitBackbone, scorer: ChannelScorer,
                 feature_backend: CodecBackend, cfg: PipelineConfig) -> EncodeResult:
    f_hq = backbone.extract_hq(img)
    if cfg.selection == "argmax":
        mask, _ = select_channels_argmax(f_hq, scorer)
    else:
        mask, _ = select_channels(f_hq, scorer, GumbelConfig(), seed=cfg.selection_seed)
    feature_stream = encode_container(f_hq, mask, feature_backend)
    texture_stream = encode_texture(
        downscale(img, cfg.texture_scale), texture_backend_for(cfg.texture_quality))
    return EncodeResult(feature_stream, texture_stream, mask,
                        _breakdown(feature_stream, texture_stream, img.height, img.width))


def decode_image(feature_stream: bytes, texture_stream: bytes, backbone: SplitBackbone,
                 frm: Frm | None, cfg: PipelineConfig,
                 registry: dict[int, CodecBackend],
                 irnn: Irnn | None = None) -> DecodeResult:
    f_m, mask, _ = decode_container(feature_stream, registry)
    texture = decode_texture(texture_stream, registry)
    f_lq = backbone.extract_lq(texture, cfg.texture_scale)
    if frm is None:
        f_hat = fill_missing(f_m, f_lq, mask)
    else:
        f_hat = reconstruct(frm, f_m, f_lq, mask)
    task = backbone.infer_tail(f_hat)
    preview = irnn_forward(irnn, texture, f_hat) if irnn is not None else None
    return DecodeResult(task, f_hat, mask, texture, preview)


def encode_feature_anchor(img: SourceImage, backbone: SplitBackbone,
                          feature_backend: CodecBackend,
                          cfg: PipelineConfig) -> EncodeResult:
    """Baseline: quantize and tile every channel, no selection, no texture use."""
    f_hq = backbone.extract_hq(img)
    mask = ChannelMask(np.ones(f_hq.channels, dtype=np.uint8))
    feature_stream = encode_container(f_hq, mask, feature_backend)
    texture_stream = encode_texture(
        downscale(img, cfg.texture_scale), texture_backend_for(cfg.texture_quality))
    return EncodeResult(feature_stream, texture_stream, mask,
                        _breakdown(feature_stream, texture_stream, img.height, img.width))


def encode_image_anchor(img: SourceImage, quality: int) -> tuple[bytes, RateBreakdown]:
    """Baseline: compress the full-resolution image itself, features never sent."""
    backend = texture_backend_for(quality)
    blob = encode_texture(img, backend)
    rate = RateBreakdown(0, 0, len(blob) * 8, img.height, img.width)
    return blob, rate
