"""Rate-accuracy sweeps, preview-quality comparison, and their CSV/plot outputs.

Arms follow the evaluation protocol of the method: "proposed" runs the full
two-stream pipeline with learned selection; "feature-anchor" compresses all
tiled channels with the lossy frame codec and sends no texture;
"image-anchor" compresses the source image itself and classifies the decoded
pixels; "uncompressed" is the clean-accuracy reference at 24 bpp.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import torch

from . import data
from .backbone import SplitBackbone
from .bd import RatePoint
from .codec import (
    RequantBackend,
    bpp,
    decode_container,
    decode_texture,
    default_registry,
    encode_container,
)
from .datamodel import ChannelMask, SourceImage
from .pipeline import (
    PipelineConfig,
    decode_image,
    encode_image,
    encode_image_anchor,
    texture_roundtrip,
)
from .training import (
    FcnnArtifacts,
    IrnnArtifacts,
    TrainConfig,
    backbone_for,
    irnn_features,
    train_fcnn_full,
    train_irnn_full,
)
from .upscaler import psnr

__all__ = [
    "SweepError",
    "SweepConfig",
    "RateRow",
    "PsnrRow",
    "run_rate_accuracy",
    "run_psnr_eval",
    "points_for_arm",
    "write_rate_csv",
    "read_rate_csv",
    "write_psnr_csv",
    "plot_rate_curves",
]

_KNOWN_ARMS = ("proposed", "feature-anchor", "image-anchor", "uncompressed")


class SweepError(ValueError):
    """Sweep configuration cannot produce the requested curves."""


@dataclass(frozen=True)
class SweepConfig:
    arms: tuple[str, ...] = ("proposed", "feature-anchor", "image-anchor")
    lams: tuple[float, ...] = (0.1, 1.0, 3.0, 10.0)
    feature_steps: tuple[int, ...] = (4, 16, 64, 128)
    image_steps: tuple[int, ...] = (4, 16, 64, 128)
    max_images: int = 64
    out_dir: str | None = None

    def __post_init__(self) -> None:
        for arm in self.arms:
            if arm not in _KNOWN_ARMS:
                raise SweepError(f"unknown arm {arm!r}; known: {_KNOWN_ARMS}")
        knobs = {"proposed": self.lams, "feature-anchor": self.feature_steps,
                 "image-anchor": self.image_steps}
        for arm, settings in knobs.items():
            if arm in self.arms and len(settings) < 2:
                raise SweepError(f"arm {arm!r} needs >= 2 settings, got {len(settings)}")


@dataclass(frozen=True)
class RateRow:
    arm: str
    setting: str
    bpp: float
    accuracy: float


@dataclass(frozen=True)
class PsnrRow:
    arm: str
    image: int
    psnr: float


def _val_items(base: TrainConfig, limit: int) -> list[data.LabeledImage]:
    dcfg = data.DatasetConfig(train_size=base.train_size, val_size=base.val_size,
                              seed=base.data_seed)
    _, val = data.make_split(dcfg)
    return val[:limit]


def _proposed_points(cfg: SweepConfig, base: TrainConfig, items: list[data.LabeledImage],
                     cache_dir: str | Path | None) -> list[RateRow]:
    rows = []
    registry = default_registry()
    pcfg = PipelineConfig(texture_scale=base.texture_scale,
                          texture_quality=base.texture_quality)
    for lam in cfg.lams:
        art = train_fcnn_full(replace(base, lam=lam), cache_dir)
        backend = RequantBackend(step=1)
        hits, bits = 0, 0
        for it in items:
            enc = encode_image(it.image, art.backbone, art.scorer, backend, pcfg)
            dec = decode_image(enc.feature_stream, enc.texture_stream, art.backbone,
                               art.frm, pcfg, registry)
            hits += int(dec.task.predicted_class == it.label)
            bits += enc.rate.total_bits
        h, w = items[0].image.height, items[0].image.width
        rows.append(RateRow("proposed", f"lam={lam:g}",
                            bpp(bits / len(items), h, w), 100.0 * hits / len(items)))
    return rows


def _feature_anchor_points(cfg: SweepConfig, backbone: SplitBackbone,
                           items: list[data.LabeledImage]) -> list[RateRow]:
    rows = []
    registry = default_registry()
    for step in cfg.feature_steps:
        backend = RequantBackend(step=step)
        hits, bits = 0, 0
        for it in items:
            f = backbone.extract_hq(it.image)
            mask = ChannelMask(np.ones(f.channels, dtype=np.uint8))
            stream = encode_container(f, mask, backend)
            f_rec, _, _ = decode_container(stream, registry)
            hits += int(backbone.infer_tail(f_rec).predicted_class == it.label)
            bits += len(stream) * 8
        h, w = items[0].image.height, items[0].image.width
        rows.append(RateRow("feature-anchor", f"step={step}",
                            bpp(bits / len(items), h, w), 100.0 * hits / len(items)))
    return rows


def _image_anchor_points(cfg: SweepConfig, backbone: SplitBackbone,
                         items: list[data.LabeledImage]) -> list[RateRow]:
    rows = []
    registry = default_registry()
    for step in cfg.image_steps:
        hits, bits = 0, 0
        for it in items:
            blob, rate = encode_image_anchor(it.image, step)
            decoded = decode_texture(blob, registry)
            hits += int(backbone.full_infer(decoded).predicted_class == it.label)
            bits += rate.total_bits
        h, w = items[0].image.height, items[0].image.width
        rows.append(RateRow("image-anchor", f"step={step}",
                            bpp(bits / len(items), h, w), 100.0 * hits / len(items)))
    return rows


def _uncompressed_point(backbone: SplitBackbone,
                        items: list[data.LabeledImage]) -> list[RateRow]:
    hits = sum(int(backbone.full_infer(it.image).predicted_class == it.label)
               for it in items)
    return [RateRow("uncompressed", "raw", 24.0, 100.0 * hits / len(items))]


def run_rate_accuracy(cfg: SweepConfig, base: TrainConfig,
                      cache_dir: str | Path | None = None,
                      backbone: SplitBackbone | None = None) -> list[RateRow]:
    """Mean bpp and top-1 accuracy per arm and setting over the validation set."""
    items = _val_items(base, cfg.max_images)
    if not items:
        raise SweepError("no evaluation images")
    rows: list[RateRow] = []
    need_backbone = {"feature-anchor", "image-anchor", "uncompressed"} & set(cfg.arms)
    if backbone is None and need_backbone:
        backbone = backbone_for(base)
    if "proposed" in cfg.arms:
        rows += _proposed_points(cfg, base, items, cache_dir)
    if "feature-anchor" in cfg.arms:
        rows += _feature_anchor_points(cfg, backbone, items)
    if "image-anchor" in cfg.arms:
        rows += _image_anchor_points(cfg, backbone, items)
    if "uncompressed" in cfg.arms:
        rows += _uncompressed_point(backbone, items)
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rate_csv(rows, out / "rate_points.csv")
        plot_rate_curves(rows, out / "rate_accuracy.png")
    return rows


def points_for_arm(rows: list[RateRow], arm: str) -> list[RatePoint]:
    return [RatePoint(r.bpp, r.accuracy, arm) for r in rows if r.arm == arm]


def write_rate_csv(rows: list[RateRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arm", "setting", "bpp", "accuracy"])
        for r in rows:
            w.writerow([r.arm, r.setting, f"{r.bpp:.6f}", f"{r.accuracy:.4f}"])


def read_rate_csv(path: str | Path) -> list[RateRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(RateRow(rec["arm"], rec["setting"],
                                float(rec["bpp"]), float(rec["accuracy"])))
    return rows


def plot_rate_curves(rows: list[RateRow], path: str | Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 4))
    for arm in sorted({r.arm for r in rows}):
        pts = sorted((r.bpp, r.accuracy) for r in rows if r.arm == arm)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=arm)
    ax.set_xlabel("bpp")
    ax.set_ylabel("top-1 accuracy [%]")
    ax.set_xscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# --- preview-quality comparison ---

def run_psnr_eval(base: TrainConfig, fcnn: FcnnArtifacts | None = None,
                  cache_dir: str | Path | None = None,
                  max_images: int = 64,
                  out_dir: str | Path | None = None,
                  texture_sr: IrnnArtifacts | None = None,
                  texture_feature_sr: IrnnArtifacts | None = None,
                  ) -> tuple[list[PsnrRow], dict[str, float]]:
    """Bicubic vs texture-only net vs texture+feature net, mean PSNR per arm.

    Pass pre-trained networks to skip the in-process training of either arm.
    """

    if texture_sr is None:
        texture_sr = train_irnn_full(replace(base, features_off=True), fcnn, cache_dir)
    if texture_feature_sr is None:
        texture_feature_sr = train_irnn_full(replace(base, features_off=False), fcnn,
                                             cache_dir)
    items = _val_items(base, max_images)
    backbone = texture_feature_sr.backbone
    feats = irnn_features(backbone, items, base, fcnn)
    rows: list[PsnrRow] = []
    for i, it in enumerate(items):
        lr_dec = texture_roundtrip(it.image, base.texture_scale, base.texture_quality)
        bicubic = data.upscale(lr_dec, base.texture_scale)
        rows.append(PsnrRow("bicubic", i, psnr(it.image, bicubic)))
        lr_t = torch.from_numpy(lr_dec.pixels[None].astype(np.float32))
        with torch.no_grad():
            z = torch.zeros_like(feats[i:i + 1])
            out_t = texture_sr.net(lr_t, z, clamp=True)
            out_tf = texture_feature_sr.net(lr_t, feats[i:i + 1], clamp=True)
        rows.append(PsnrRow("texture-sr", i,
                            psnr(it.image, SourceImage(out_t[0].numpy().astype(np.float64)))))
        rows.append(PsnrRow("texture-feature-sr", i,
                            psnr(it.image, SourceImage(out_tf[0].numpy().astype(np.float64)))))
    means = {arm: float(np.mean([r.psnr for r in rows if r.arm == arm]))
             for arm in ("bicubic", "texture-sr", "texture-feature-sr")}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_psnr_csv(rows, out / "psnr.csv")
    return rows, means


def write_psnr_csv(rows: list[PsnrRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arm", "image", "psnr"])
        for r in rows:
            w.writerow([r.arm, r.image, f"{r.psnr:.4f}"])
