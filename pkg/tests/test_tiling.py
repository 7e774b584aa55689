"""Near-square tiling grid and lossless pack/unpack of kept channels."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgfc.codec import (
    ConsistencyError,
    TiledFrame,
    TileLayout,
    compute_quant_params,
    layout_for,
    tile,
    untile,
)
from tgfc.datamodel import ChannelMask, FeatureTensor, QuantParams


def test_layout_five_tiles_is_three_by_two():
    # isqrt(5) = 2, 2*2 < 5 -> 3 cols, ceil(5/3) = 2 rows
    lay = layout_for(5, 8, 8)
    assert (lay.grid_cols, lay.grid_rows) == (3, 2)
    assert (lay.frame_height, lay.frame_width) == (16, 24)


@pytest.mark.parametrize("kept,cols,rows", [
    (1, 1, 1), (2, 2, 1), (3, 2, 2), (4, 2, 2), (9, 3, 3), (10, 4, 3), (16, 4, 4),
])
def test_layout_grid_shapes(kept, cols, rows):
    lay = layout_for(kept, 4, 4)
    assert (lay.grid_cols, lay.grid_rows) == (cols, rows)
    assert lay.grid_cols * lay.grid_rows >= kept
    # near-square: removing a row would not fit
    assert (lay.grid_rows - 1) * lay.grid_cols < kept


def test_layout_zero_kept_is_empty_frame():
    lay = layout_for(0, 8, 8)
    assert lay.frame_height == 0 and lay.frame_width == 0


def test_layout_rejects_undersized_grid():
    with pytest.raises(ConsistencyError):
        TileLayout(1, 1, 4, 4, kept_count=2)


def test_frame_rejects_wrong_shape():
    lay = layout_for(2, 4, 4)
    with pytest.raises(ConsistencyError):
        TiledFrame(lay, np.zeros((4, 4)))


def test_tile_places_channels_row_major():
    f = FeatureTensor(np.stack([np.full((2, 2), v) for v in (0.0, 1.0, 3.0)]))
    m = ChannelMask.from_string("111")
    q = compute_quant_params(f, m)
    frame = tile(f, m, q)
    # 2x2 grid; tiles hold codes for constants 0, 1, 3 with shared params? no:
    # per-channel params, each channel constant -> logmax 0 -> code 0 everywhere
    assert frame.pixels.shape == (4, 4)
    assert not frame.pixels.any()
    back = untile(frame, m, q)
    assert np.allclose(back.data, f.data)


def test_roundtrip_recovers_kept_exactly_and_zeroes_dropped():
    rng = np.random.default_rng(7)
    f = FeatureTensor(rng.uniform(0, 9, size=(6, 3, 5)))
    m = ChannelMask.from_string("101101")
    q = compute_quant_params(f, m)
    frame = tile(f, m, q)
    back = untile(frame, m, q)
    # kept channels match the dequantized codes bit-exactly on re-tile
    frame2 = tile(back, m, q)
    assert np.array_equal(frame.pixels, frame2.pixels)
    # dropped channels come back as zeros
    for ci in np.flatnonzero(1 - m.bits):
        assert not back.data[ci].any()


def test_tile_rejects_mismatched_mask():
    f = FeatureTensor(np.ones((3, 2, 2)))
    m = ChannelMask.from_string("10")
    with pytest.raises(ConsistencyError):
        tile(f, m, compute_quant_params(FeatureTensor(np.ones((2, 2, 2))), m))


def test_tile_rejects_quant_params_for_wrong_channels():
    f = FeatureTensor(np.ones((3, 2, 2)))
    m = ChannelMask.from_string("110")
    bad_q = QuantParams(np.array([0, 2]), np.zeros(2, np.float32), np.zeros(2, np.float32))
    with pytest.raises(ConsistencyError):
        tile(f, m, bad_q)


def test_untile_rejects_layout_mask_disagreement():
    f = FeatureTensor(np.ones((4, 2, 2)))
    m = ChannelMask.from_string("1100")
    q = compute_quant_params(f, m)
    frame = tile(f, m, q)
    m3 = ChannelMask.from_string("1110")
    with pytest.raises(ConsistencyError):
        untile(frame, m3, compute_quant_params(f, m3))


@st.composite
def tiling_case(draw):
    c = draw(st.integers(1, 12))
    h = draw(st.integers(1, 5))
    w = draw(st.integers(1, 5))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    f = FeatureTensor(rng.normal(0, 3, size=(c, h, w)))
    bits = rng.integers(0, 2, size=c).astype(np.uint8)
    return f, ChannelMask(bits)


@settings(max_examples=60, deadline=None)
@given(tiling_case())
def test_tile_untile_is_stable_after_one_pass(case):
    """After one quantization pass the frame is a fixed point of tile∘untile."""
    f, m = case
    q = compute_quant_params(f, m)
    frame = tile(f, m, q)
    back = untile(frame, m, q)
    assert np.array_equal(tile(back, m, q).pixels, frame.pixels)
