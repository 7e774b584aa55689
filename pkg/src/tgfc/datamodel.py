"""Shared value types for both coding branches, plus the pure mask algebra.

Everything here is plain numpy and free of gradient bookkeeping, so the
types can be serialized and handed to codec backends as-is.  All operations
are pure functions on immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "DataError",
    "ConfigurationError",
    "FeatureTensor",
    "ChannelMask",
    "ImportanceLogits",
    "QuantParams",
    "SourceImage",
    "apply_mask",
    "complement_mask",
    "mask_mean",
]


class DimensionError(ValueError):
    """Shapes or lengths of two values do not line up."""


class DataError(ValueError):
    """Value content violates an invariant (NaN/Inf, out-of-range entries)."""


class ConfigurationError(ValueError):
    """Unknown identifier or inconsistent configuration."""


@dataclass(frozen=True)
class FeatureTensor:
    """A C x H x W activation block from a split backbone."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        if arr.ndim != 3:
            raise DimensionError(f"feature tensor must be C x H x W, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"feature tensor dims must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("feature tensor contains NaN or Inf")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class ChannelMask:
    """Binary keep/drop vector over the channels of a feature tensor."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionError(f"mask must be a non-empty 1-D vector, got shape {arr.shape}")
        if not np.all(np.isin(arr, (0, 1))):
            raise DataError("mask entries must be exactly 0 or 1")
        object.__setattr__(self, "bits", arr.astype(np.uint8))

    @classmethod
    def from_string(cls, s: str) -> "ChannelMask":
        """Build from a literal like "1010" (channel 0 first)."""
        return cls(np.array([int(c) for c in s], dtype=np.uint8))

    @property
    def length(self) -> int:
        return self.bits.size

    @property
    def kept_count(self) -> int:
        return int(self.bits.sum())

    def kept_indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __str__(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


@dataclass(frozen=True)
class ImportanceLogits:
    """Per-channel keep/drop scores produced by the channel scorer."""

    select_logits: np.ndarray
    reject_logits: np.ndarray

    def __post_init__(self):
        sel = np.asarray(self.select_logits, dtype=np.float64)
        rej = np.asarray(self.reject_logits, dtype=np.float64)
        if sel.ndim != 1 or rej.ndim != 1 or sel.size != rej.size:
            raise DimensionError("select/reject logits must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(sel)) and np.all(np.isfinite(rej))):
            raise DataError("logits contain NaN or Inf")
        object.__setattr__(self, "select_logits", sel)
        object.__setattr__(self, "reject_logits", rej)

    @property
    def channels(self) -> int:
        return self.select_logits.size


@dataclass(frozen=True)
class QuantParams:
    """Per-kept-channel (min, logmax) side info for log-domain dequantization.

    Values are stored as float32 because that is their wire precision; the
    quantizer uses exactly these values so encoder and decoder agree bit-exactly.
    """

    channel_indices: np.ndarray
    min_vals: np.ndarray
    logmaxes: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.channel_indices, dtype=np.int64)
        mins = np.asarray(self.min_vals, dtype=np.float32)
        lmx = np.asarray(self.logmaxes, dtype=np.float32)
        if not (idx.ndim == mins.ndim == lmx.ndim == 1 and idx.size == mins.size == lmx.size):
            raise DimensionError("quant param arrays must be 1-D and equal length")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise DataError("channel indices must be strictly increasing")
        if idx.size and np.any(idx < 0):
            raise DataError("channel indices must be non-negative")
        if not (np.all(np.isfinite(mins)) and np.all(np.isfinite(lmx))):
            raise DataError("quant params contain NaN or Inf")
        if np.any(lmx < 0):
            raise DataError("logmax must be >= 0")
        object.__setattr__(self, "channel_indices", idx)
        object.__setattr__(self, "min_vals", mins)
        object.__setattr__(self, "logmaxes", lmx)

    @property
    def count(self) -> int:
        return self.channel_indices.size

    @classmethod
    def empty(cls) -> "QuantParams":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, np.float32), np.zeros(0, np.float32))


@dataclass(frozen=True)
class SourceImage:
    """An RGB image as 3 x H x W floats in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise DimensionError(f"image must be 3 x H x W, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("image contains NaN or Inf")
        if arr.min() < -1e-6 or arr.max() > 1 + 1e-6:
            raise DataError("image values must lie in [0, 1]")
        object.__setattr__(self, "pixels", np.clip(arr, 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


def apply_mask(f: FeatureTensor, m: ChannelMask) -> FeatureTensor:
    """Keep channel i of ``f`` where bit i is 1, zero it where the bit is 0."""
    if m.length != f.channels:
        raise DimensionError(f"mask length {m.length} != channel count {f.channels}")
    keep = m.bits.astype(bool)[:, None, None]
    out = np.where(keep, f.data, np.zeros((), dtype=f.data.dtype))
    return FeatureTensor(out)


def complement_mask(m: ChannelMask) -> ChannelMask:
    """Flip every bit: the channels the mask dropped."""
    return ChannelMask((1 - m.bits).astype(np.uint8))


def mask_mean(m: ChannelMask) -> float:
    """Fraction of kept channels, in [0, 1]."""
    return float(m.bits.sum()) / m.length
