"""Synthetic labeled image corpus and texture-resolution helpers.

The procedural generator gives a 10-way classification problem on 32x32 RGB
images that is learnable by a small CNN in seconds yet survives 2x/4x
downsampling, which is exactly the regime the texture stream operates in.
Every image is derived from ``SeedSequence((seed, split, index))`` so corpora
are reproducible and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .datamodel import DataError, SourceImage

__all__ = [
    "DatasetConfig",
    "LabeledImage",
    "synth_image",
    "make_split",
    "load_directory",
    "load_image",
    "save_image",
    "downscale",
    "upscale",
    "to_batch",
]

# base colors keep classes separable even when the pattern is blurred away
_PALETTE = np.array([
    [0.85, 0.25, 0.25], [0.25, 0.80, 0.30], [0.25, 0.35, 0.85],
    [0.85, 0.75, 0.20], [0.75, 0.25, 0.80], [0.20, 0.80, 0.80],
    [0.90, 0.55, 0.20], [0.55, 0.35, 0.20], [0.45, 0.85, 0.60],
    [0.60, 0.60, 0.90],
])


@dataclass(frozen=True)
class DatasetConfig:
    num_classes: int = 10
    image_size: int = 32
    train_size: int = 512
    val_size: int = 128
    seed: int = 0
    noise: float = 0.05

    def __post_init__(self) -> None:
        if not 1 <= self.num_classes <= 10:
            raise DataError(f"num_classes must be in [1, 10], got {self.num_classes}")
        if self.image_size < 8:
            raise DataError(f"image_size must be >= 8, got {self.image_size}")


@dataclass(frozen=True)
class LabeledImage:
    image: SourceImage
    label: int


def _pattern(label: int, yy: np.ndarray, xx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-class geometric mask in [0, 1] with randomized phase / frequency."""
    k = int(rng.integers(2, 5))
    phase = rng.uniform(0.0, 1.0)
    if label == 0:
        return 0.5 + 0.5 * np.sin(2 * np.pi * (k * yy + phase))
    if label == 1:
        return 0.5 + 0.5 * np.sin(2 * np.pi * (k * xx + phase))
    if label == 2:
        return ((np.floor(k * yy + phase) + np.floor(k * xx + phase)) % 2)
    if label == 3:
        return (xx + yy) / 2.0
    if label == 4:
        r = np.hypot(yy - 0.5, xx - 0.5)
        return (r < rng.uniform(0.25, 0.4)).astype(np.float64)
    if label == 5:
        r = np.hypot(yy - 0.5, xx - 0.5)
        return 0.5 + 0.5 * np.sin(2 * np.pi * (2 * k * r + phase))
    if label == 6:
        return ((yy < 0.5) ^ (xx < 0.5)).astype(np.float64)
    if label == 7:
        return 0.5 + 0.5 * np.sin(2 * np.pi * (k * (xx + yy) + phase))
    if label == 8:
        r = np.hypot(yy - 0.5, xx - 0.5)
        return np.clip(1.0 - r / 0.72, 0.0, 1.0)
    bar = rng.uniform(0.08, 0.16)
    return ((np.abs(yy - 0.5) < bar) | (np.abs(xx - 0.5) < bar)).astype(np.float64)


def synth_image(label: int, size: int, rng: np.random.Generator,
                noise: float = 0.05) -> SourceImage:
    """One procedural sample of the given class."""
    ax = (np.arange(size) + 0.5) / size
    yy, xx = np.meshgrid(ax, ax, indexing="ij")
    mask = _pattern(label % 10, yy, xx, rng)
    fg = np.clip(_PALETTE[label % 10] + rng.uniform(-0.08, 0.08, 3), 0.05, 0.95)
    bg = np.clip(1.0 - _PALETTE[label % 10] + rng.uniform(-0.08, 0.08, 3), 0.05, 0.95)
    img = bg[:, None, None] * (1.0 - mask) + fg[:, None, None] * mask
    img = img + rng.uniform(-noise, noise, img.shape)
    return SourceImage(np.clip(img, 0.0, 1.0))


def _one(config: DatasetConfig, split: int, index: int) -> LabeledImage:
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((config.seed, split, index))))
    label = index % config.num_classes
    return LabeledImage(synth_image(label, config.image_size, rng, config.noise), label)


def make_split(config: DatasetConfig) -> tuple[list[LabeledImage], list[LabeledImage]]:
    """Deterministic (train, val) corpora; labels cycle so both are balanced."""
    train = [_one(config, 0, i) for i in range(config.train_size)]
    val = [_one(config, 1, i) for i in range(config.val_size)]
    return train, val


def load_image(path: str | Path, size: int | None = None) -> SourceImage:
    """Read an image file into a [0, 1] float source image, optionally resized."""
    with Image.open(path) as im:
        im = im.convert("RGB")
        if size is not None and im.size != (size, size):
            im = im.resize((size, size), Image.BICUBIC)
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return SourceImage(arr.transpose(2, 0, 1))


def save_image(img: SourceImage, path: str | Path) -> None:
    arr = np.rint(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr.transpose(1, 2, 0)).save(path)


def load_directory(root: str | Path, size: int | None = None) -> list[LabeledImage]:
    """Read a ``root/<class_name>/*.png`` tree; labels follow sorted class names."""
    root = Path(root)
    classes = sorted(p for p in root.iterdir() if p.is_dir())
    if not classes:
        raise DataError(f"no class subdirectories under {root}")
    items: list[LabeledImage] = []
    for label, cls_dir in enumerate(classes):
        for f in sorted(cls_dir.iterdir()):
            if f.suffix.lower() in {".png", ".jpg", ".jpeg", ".bmp"}:
                items.append(LabeledImage(load_image(f, size), label))
    if not items:
        raise DataError(f"no images found under {root}")
    return items


def downscale(img: SourceImage, scale: int) -> SourceImage:
    """Bicubic reduction by an integer factor; the encoder-side texture path."""
    if scale < 1:
        raise DataError(f"scale must be >= 1, got {scale}")
    if img.height % scale or img.width % scale:
        raise DataError(f"{img.height}x{img.width} not divisible by scale {scale}")
    if scale == 1:
        return img
    x = torch.from_numpy(img.pixels[None].astype(np.float32))
    y = F.interpolate(x, scale_factor=1.0 / scale, mode="bicubic", align_corners=False)
    return SourceImage(np.clip(y[0].numpy().astype(np.float64), 0.0, 1.0))


def upscale(img: SourceImage, scale: int) -> SourceImage:
    """Bicubic expansion; the naive decoder-side preview baseline."""
    if scale < 1:
        raise DataError(f"scale must be >= 1, got {scale}")
    if scale == 1:
        return img
    x = torch.from_numpy(img.pixels[None].astype(np.float32))
    y = F.interpolate(x, scale_factor=float(scale), mode="bicubic", align_corners=False)
    return SourceImage(np.clip(y[0].numpy().astype(np.float64), 0.0, 1.0))


def to_batch(items: list[LabeledImage]) -> tuple[torch.Tensor, torch.Tensor]:
    imgs = torch.from_numpy(
        np.stack([it.image.pixels for it in items]).astype(np.float32))
    labels = torch.tensor([it.label for it in items], dtype=torch.long)
    return imgs, labels
