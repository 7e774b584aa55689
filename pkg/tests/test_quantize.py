"""Log-domain 8-bit quantizer: hand-checked codes, idempotence, range bound."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgfc.codec import (
    dequant_range,
    dequantize_channel,
    quantize_channel,
    quantize_channel_with_params,
    round_half_away,
)
from tgfc.datamodel import DataError


def test_round_half_away_at_midpoints():
    x = np.array([0.5, 1.5, 2.5, -0.5, -1.5, 0.49, -0.49])
    assert round_half_away(x).tolist() == [1, 2, 3, -1, -2, 0, -0]


def test_known_codes_zero_one_three():
    # min 0, max 3 -> logmax = log2(4) = 2; log2(v+1)/2 * 255 = 0, 127.5, 255
    codes, min_val, logmax = quantize_channel(np.array([0.0, 1.0, 3.0]))
    assert min_val == 0.0
    assert logmax == pytest.approx(2.0, abs=1e-12)
    assert codes.tolist() == [0, 128, 255]
    assert codes.dtype == np.uint8


def test_known_dequant_values():
    vals = dequantize_channel(np.array([0, 128, 255], dtype=np.uint8), 0.0, 2.0)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)
    assert vals[1] == pytest.approx(1.00544384, abs=1e-7)  # 2^(256/255) - 1
    assert vals[2] == pytest.approx(3.0, abs=1e-12)


def test_constant_channel_codes_all_zero():
    codes, min_val, logmax = quantize_channel(np.full((4, 4), 7.25))
    assert logmax == 0.0
    assert min_val == 7.25
    assert not codes.any()
    back = dequantize_channel(codes, min_val, logmax)
    assert np.array_equal(back, np.full((4, 4), 7.25))


def test_negative_values_shift_by_min():
    codes, min_val, logmax = quantize_channel(np.array([-2.0, -1.0, 1.0]))
    assert min_val == -2.0
    assert codes[0] == 0 and codes[2] == 255
    back = dequantize_channel(codes, min_val, logmax)
    assert back[0] == pytest.approx(-2.0, abs=1e-9)
    assert back[2] == pytest.approx(1.0, abs=1e-9)


def test_rejects_nan():
    with pytest.raises(DataError):
        quantize_channel(np.array([0.0, np.nan]))


channel_vals = st.one_of(
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=64),
    st.floats(-100, 100, allow_nan=False).map(lambda v: [v] * 9),
)


@settings(max_examples=200, deadline=None)
@given(channel_vals)
def test_requantization_is_idempotent(vals):
    arr = np.array(vals)
    codes, min_val, logmax = quantize_channel(arr)
    recon = dequantize_channel(codes, min_val, logmax)
    codes2 = quantize_channel_with_params(recon, min_val, logmax)
    assert np.array_equal(codes, codes2)


@settings(max_examples=200, deadline=None)
@given(channel_vals)
def test_dequantized_values_lie_in_derived_range(vals):
    arr = np.array(vals)
    codes, min_val, logmax = quantize_channel(arr)
    lo, hi = dequant_range(min_val, logmax)
    recon = dequantize_channel(codes, min_val, logmax)
    # params are float32 on the wire, so the bracket is float32-tight only
    eps = 1e-4 * max(1.0, abs(hi), abs(lo))
    assert recon.min() >= lo - eps
    assert recon.max() <= hi + eps
    # range must bracket the original data
    assert lo <= arr.min() + eps
    assert hi >= arr.max() - eps


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=2, max_size=32))
def test_endpoint_codes_are_exact(vals):
    # anchor the minimum at exactly 0 so float32 min storage is exact too
    arr = np.array(vals)
    arr = arr - arr.min()
    codes, min_val, logmax = quantize_channel(arr)
    if logmax > 0:
        assert codes[np.argmin(arr)] == 0
        assert codes[np.argmax(arr)] == 255
