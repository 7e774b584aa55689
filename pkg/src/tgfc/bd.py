"""Bjøntegaard deltas between two rate-quality curves.

Curves are interpolated with a monotone piecewise cubic (PCHIP) in
(log10 rate, quality) space and integrated in closed form over the overlap
interval.  Rate mode answers "how many percent fewer bits for the same
quality"; quality mode answers "how much more quality at the same rate".
Rate deltas are multiplicative: a curve needing half the bits reports -50%,
its inverse +100%, and (1 + d_ab/100) * (1 + d_ba/100) == 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = ["MetricError", "RatePoint", "bd_metric", "bd_rate", "bd_quality"]


class MetricError(ValueError):
    """Curves unusable for a BD computation (too few points, no overlap)."""


@dataclass(frozen=True)
class RatePoint:
    """One operating point of one arm; ``quality`` is accuracy % or PSNR dB."""

    bpp: float
    quality: float
    arm: str = ""

    def __post_init__(self) -> None:
        if not self.bpp > 0:
            raise MetricError(f"bpp must be positive, got {self.bpp}")


def _curve_arrays(curve: list[RatePoint]) -> tuple[np.ndarray, np.ndarray]:
    if len(curve) < 4:
        raise MetricError(f"need >= 4 points per curve, got {len(curve)}")
    rates = np.array([p.bpp for p in curve], dtype=np.float64)
    quals = np.array([p.quality for p in curve], dtype=np.float64)
    order = np.argsort(rates)
    rates, quals = rates[order], quals[order]
    if np.any(np.diff(rates) <= 0):
        raise MetricError("rates must be strictly increasing")
    return np.log10(rates), quals


def _overlap(a_lo: float, a_hi: float, b_lo: float, b_hi: float) -> tuple[float, float]:
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    if not hi > lo:
        raise MetricError(f"curves do not overlap: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")
    return lo, hi


def _mean_integral(x: np.ndarray, y: np.ndarray, lo: float, hi: float) -> float:
    return float(PchipInterpolator(x, y).integrate(lo, hi)) / (hi - lo)


def bd_rate(curve_a: list[RatePoint], curve_b: list[RatePoint]) -> float:
    """Average rate change of b relative to a at equal quality, in percent."""
    log_a, qual_a = _curve_arrays(curve_a)
    log_b, qual_b = _curve_arrays(curve_b)
    for q in (qual_a, qual_b):
        if np.any(np.diff(q) <= 0):
            raise MetricError("quality must increase strictly with rate for rate mode")
    lo, hi = _overlap(qual_a[0], qual_a[-1], qual_b[0], qual_b[-1])
    mean_a = _mean_integral(qual_a, log_a, lo, hi)
    mean_b = _mean_integral(qual_b, log_b, lo, hi)
    return (10.0 ** (mean_b - mean_a) - 1.0) * 100.0


def bd_quality(curve_a: list[RatePoint], curve_b: list[RatePoint]) -> float:
    """Average quality change of b relative to a at equal rate."""
    log_a, qual_a = _curve_arrays(curve_a)
    log_b, qual_b = _curve_arrays(curve_b)
    lo, hi = _overlap(log_a[0], log_a[-1], log_b[0], log_b[-1])
    mean_a = _mean_integral(log_a, qual_a, lo, hi)
    mean_b = _mean_integral(log_b, qual_b, lo, hi)
    return mean_b - mean_a


def bd_metric(curve_a: list[RatePoint], curve_b: list[RatePoint], mode: str = "rate") -> float:
    if mode == "rate":
        return bd_rate(curve_a, curve_b)
    if mode == "quality":
        return bd_quality(curve_a, curve_b)
    raise MetricError(f"mode must be 'rate' or 'quality', got {mode!r}")
