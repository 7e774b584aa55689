"""Texture stream: the downsampled image pushed through a frame backend.

The three color planes are coded as independent 8-bit frames by whichever
backend is configured, wrapped in a small header so the decoder knows the
dimensions.  Layout (little-endian):

    magic "TGTX" | version u8 | H u16 | W u16 | codec_id u8 |
    3 x (payload_len u32 + payload)
"""

from __future__ import annotations

import struct

import numpy as np

from ..datamodel import SourceImage
from .backends import CodecBackend
from .container import (BadMagicError, TruncatedStreamError, UnknownCodecError,
                        UnsupportedVersionError)
from .tiling import TiledFrame, TileLayout

__all__ = ["TEXTURE_MAGIC", "encode_texture", "decode_texture", "image_to_uint8", "uint8_to_image"]

TEXTURE_MAGIC = b"TGTX"
_TEXTURE_VERSION = 1
_HEADER = struct.Struct("<4sB2HB")


def image_to_uint8(img: SourceImage) -> np.ndarray:
    """[0,1] floats to 8-bit, rounding to nearest."""
    return np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)


def uint8_to_image(planes: np.ndarray) -> SourceImage:
    return SourceImage(planes.astype(np.float32) / 255.0)


def _plane_layout(h: int, w: int) -> TileLayout:
    return TileLayout(grid_cols=1, grid_rows=1, tile_h=h, tile_w=w, kept_count=1)


def encode_texture(img: SourceImage, backend: CodecBackend) -> bytes:
    planes = image_to_uint8(img)
    h, w = img.height, img.width
    parts = [_HEADER.pack(TEXTURE_MAGIC, _TEXTURE_VERSION, h, w, backend.codec_id)]
    layout = _plane_layout(h, w)
    for p in range(3):
        payload = backend.encode_frame(TiledFrame(layout, planes[p]))
        parts.append(struct.pack("<I", len(payload)))
        parts.append(payload)
    return b"".join(parts)


def decode_texture(data: bytes, registry: dict[int, CodecBackend]) -> SourceImage:
    if len(data) < _HEADER.size:
        raise TruncatedStreamError("texture stream shorter than its header")
    magic, version, h, w, codec_id = _HEADER.unpack_from(data, 0)
    if magic != TEXTURE_MAGIC:
        raise BadMagicError(f"bad texture magic {magic!r}")
    if version != _TEXTURE_VERSION:
        raise UnsupportedVersionError(f"unsupported texture version {version}")
    backend = registry.get(codec_id)
    if backend is None:
        raise UnknownCodecError(codec_id)
    layout = _plane_layout(h, w)
    planes = np.empty((3, h, w), dtype=np.uint8)
    pos = _HEADER.size
    for p in range(3):
        if len(data) < pos + 4:
            raise TruncatedStreamError("texture stream ends inside a plane length")
        (plen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if len(data) < pos + plen:
            raise TruncatedStreamError("texture plane payload truncated")
        planes[p] = backend.decode_frame(data[pos:pos + plen], layout).pixels
        pos += plen
    return uint8_to_image(planes)
