"""Log-domain 8-bit quantization of feature channels.

Per channel: shift so the minimum maps to 1, take log2, scale the log range
onto [0, 255] and round.  The inverse raises 2 to the scaled code and undoes
the shift, so the pair is a true inverse up to the rounding step.  The two
side-info scalars (min, logmax) travel as float32; all code arithmetic uses
the float32-cast values so encoder and decoder reproduce identical codes.
"""

from __future__ import annotations

import numpy as np

from ..datamodel import ChannelMask, DataError, FeatureTensor, QuantParams

__all__ = [
    "round_half_away",
    "quantize_channel",
    "quantize_channel_with_params",
    "dequantize_channel",
    "compute_quant_params",
    "dequant_range",
]


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest with halves away from zero, identically on all platforms."""
    x = np.asarray(x)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_channel(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Quantize one H x W channel to uint8 codes.

    Returns (codes, min_val, logmax).  A constant channel degenerates to
    logmax = 0 with all-zero codes, which dequantizes back to min_val exactly.
    """
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DataError("cannot quantize non-finite values")
    min_val = np.float32(values.min())
    logs = np.log2(values - float(min_val) + 1.0)
    logmax = np.float32(max(logs.max(), 0.0))
    codes = _codes_from_logs(logs, float(logmax))
    return codes, float(min_val), float(logmax)


def quantize_channel_with_params(values: np.ndarray, min_val: float, logmax: float) -> np.ndarray:
    """Quantize with externally supplied (min_val, logmax) side info."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DataError("cannot quantize non-finite values")
    logs = np.log2(np.maximum(values - float(np.float32(min_val)) + 1.0, np.finfo(np.float64).tiny))
    return _codes_from_logs(logs, float(np.float32(logmax)))


def _codes_from_logs(logs: np.ndarray, logmax: float) -> np.ndarray:
    if logmax <= 0.0:
        return np.zeros(logs.shape, dtype=np.uint8)
    codes = round_half_away(logs / logmax * 255.0)
    return np.clip(codes, 0, 255).astype(np.uint8)


def dequantize_channel(codes: np.ndarray, min_val: float, logmax: float) -> np.ndarray:
    """Invert :func:`quantize_channel` for one channel; returns float64 H x W."""
    codes = np.asarray(codes)
    min_val = float(np.float32(min_val))
    logmax = float(np.float32(logmax))
    if logmax <= 0.0:
        return np.full(codes.shape, min_val, dtype=np.float64)
    # codes/255 first so both endpoints are exact: code 0 -> min_val, code 255 -> 2^logmax + min - 1
    t = (codes.astype(np.float64) / 255.0) * logmax
    return np.exp2(t) - 1.0 + min_val


def dequant_range(min_val: float, logmax: float) -> tuple[float, float]:
    """Closed interval containing every dequantized value of a channel."""
    min_val = float(np.float32(min_val))
    logmax = float(np.float32(logmax))
    if logmax <= 0.0:
        return min_val, min_val
    return min_val, float(np.exp2(logmax) - 1.0 + min_val)


def compute_quant_params(f: FeatureTensor, m: ChannelMask) -> QuantParams:
    """Per-kept-channel side info for ``f`` under mask ``m``, ascending channel order."""
    if m.length != f.channels:
        raise DataError(f"mask length {m.length} != channel count {f.channels}")
    kept = m.kept_indices()
    mins = np.empty(kept.size, dtype=np.float32)
    lmx = np.empty(kept.size, dtype=np.float32)
    for j, ci in enumerate(kept):
        _, mn, lm = quantize_channel(f.data[ci])
        mins[j] = mn
        lmx[j] = lm
    return QuantParams(kept.astype(np.int64), mins, lmx)
