"""Packing kept feature channels into a single 8-bit frame and back.

Kept channels are quantized and laid out row-major on a near-square grid
(ceil(sqrt(M)) columns) so block codecs see one large grayscale image.
Unused trailing cells are zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..datamodel import ChannelMask, DataError, FeatureTensor, QuantParams
from .quantize import dequantize_channel, quantize_channel_with_params

__all__ = ["TileLayout", "TiledFrame", "ConsistencyError", "layout_for", "tile", "untile"]


class ConsistencyError(ValueError):
    """Mask, quant params, and frame layout disagree."""


@dataclass(frozen=True)
class TileLayout:
    grid_cols: int
    grid_rows: int
    tile_h: int
    tile_w: int
    kept_count: int

    def __post_init__(self):
        if self.kept_count < 0:
            raise ConsistencyError("kept_count must be >= 0")
        if self.kept_count > 0 and self.grid_cols * self.grid_rows < self.kept_count:
            raise ConsistencyError("grid too small for kept channel count")

    @property
    def frame_height(self) -> int:
        return self.grid_rows * self.tile_h

    @property
    def frame_width(self) -> int:
        return self.grid_cols * self.tile_w


@dataclass(frozen=True)
class TiledFrame:
    layout: TileLayout
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        expected = (self.layout.frame_height, self.layout.frame_width)
        if arr.shape != expected:
            raise ConsistencyError(f"frame shape {arr.shape} != layout dims {expected}")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise DataError("frame pixels must lie in [0, 255]")
        object.__setattr__(self, "pixels", arr.astype(np.uint8))


def layout_for(kept_count: int, tile_h: int, tile_w: int) -> TileLayout:
    """Near-square row-major grid for ``kept_count`` tiles of tile_h x tile_w."""
    if kept_count == 0:
        return TileLayout(0, 0, tile_h, tile_w, 0)
    cols = math.isqrt(kept_count)
    if cols * cols < kept_count:
        cols += 1
    rows = math.ceil(kept_count / cols)
    return TileLayout(cols, rows, tile_h, tile_w, kept_count)


def tile(f: FeatureTensor, m: ChannelMask, q: QuantParams) -> TiledFrame:
    """Quantize the kept channels of ``f`` and pack them into one frame."""
    if m.length != f.channels:
        raise ConsistencyError(f"mask length {m.length} != channel count {f.channels}")
    kept = m.kept_indices()
    if not np.array_equal(kept, q.channel_indices):
        raise ConsistencyError("quant params do not cover exactly the kept channels")
    layout = layout_for(kept.size, f.height, f.width)
    pixels = np.zeros((layout.frame_height, layout.frame_width), dtype=np.uint8)
    for j, ci in enumerate(kept):
        codes = quantize_channel_with_params(f.data[ci], float(q.min_vals[j]), float(q.logmaxes[j]))
        r, c = divmod(j, layout.grid_cols)
        pixels[r * f.height:(r + 1) * f.height, c * f.width:(c + 1) * f.width] = codes
    return TiledFrame(layout, pixels)


def untile(frame: TiledFrame, m: ChannelMask, q: QuantParams) -> FeatureTensor:
    """Dequantize kept channels back into their original slots; dropped channels are zero."""
    layout = frame.layout
    kept = m.kept_indices()
    if kept.size != layout.kept_count:
        raise ConsistencyError(f"mask keeps {kept.size} channels but layout holds {layout.kept_count}")
    if not np.array_equal(kept, q.channel_indices):
        raise ConsistencyError("quant params do not cover exactly the kept channels")
    out = np.zeros((m.length, layout.tile_h, layout.tile_w), dtype=np.float64)
    for j, ci in enumerate(kept):
        r, c = divmod(j, layout.grid_cols)
        codes = frame.pixels[r * layout.tile_h:(r + 1) * layout.tile_h,
                             c * layout.tile_w:(c + 1) * layout.tile_w]
        out[ci] = dequantize_channel(codes, float(q.min_vals[j]), float(q.logmaxes[j]))
    return FeatureTensor(out)
