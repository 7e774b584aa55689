"""Feature restoration: fill partition, SFT algebra, identity wiring."""

import numpy as np
import pytest
import torch

from tgfc.datamodel import ChannelMask, DimensionError, FeatureTensor
from tgfc.restoration import (
    ChannelAttention,
    Frm,
    ResidualBlock,
    SftLayer,
    enhance,
    fill_missing,
    reconstruct,
    sft_fuse,
)


def _pair(c=6, h=3, w=3, seed=0):
    rng = np.random.default_rng(seed)
    return (FeatureTensor(rng.normal(0, 1, (c, h, w))),
            FeatureTensor(rng.normal(0, 1, (c, h, w))))


class TestFillMissing:
    def test_partition(self):
        f_m, f_lq = _pair()
        m = ChannelMask.from_string("101010")
        out = fill_missing(f_m, f_lq, m)
        for i in range(6):
            src = f_m if m.bits[i] else f_lq
            assert np.array_equal(out.data[i], src.data[i])

    def test_all_ones_returns_first(self):
        f_m, f_lq = _pair()
        out = fill_missing(f_m, f_lq, ChannelMask(np.ones(6, np.uint8)))
        assert np.array_equal(out.data, f_m.data)

    def test_all_zeros_returns_second(self):
        f_m, f_lq = _pair()
        out = fill_missing(f_m, f_lq, ChannelMask(np.zeros(6, np.uint8)))
        assert np.array_equal(out.data, f_lq.data)

    def test_shape_mismatch(self):
        f_m, _ = _pair()
        with pytest.raises(DimensionError):
            fill_missing(f_m, FeatureTensor(np.ones((6, 2, 2))), ChannelMask(np.ones(6, np.uint8)))

    def test_mask_length_mismatch(self):
        f_m, f_lq = _pair()
        with pytest.raises(DimensionError):
            fill_missing(f_m, f_lq, ChannelMask(np.ones(4, np.uint8)))


class TestSft:
    def test_forced_affine_applies_exact_coefficients(self):
        sft = SftLayer(4)
        sft.force_affine(2.0, -1.0)
        x = torch.randn(1, 4, 3, 3, generator=torch.Generator().manual_seed(0))
        cond = torch.randn(1, 4, 3, 3, generator=torch.Generator().manual_seed(1))
        out = sft(x, cond)
        assert torch.allclose(out, 2.0 * x - 1.0, atol=1e-6)

    def test_forced_identity(self):
        sft = SftLayer(4)
        sft.force_identity()
        x = torch.randn(1, 4, 3, 3, generator=torch.Generator().manual_seed(2))
        cond = torch.randn(1, 4, 3, 3, generator=torch.Generator().manual_seed(3))
        assert torch.allclose(sft(x, cond), x, atol=1e-7)

    def test_per_channel_vectors(self):
        sft = SftLayer(3)
        gamma = np.array([1.0, 2.0, 0.0])
        beta = np.array([0.0, 1.0, 5.0])
        sft.force_affine(gamma, beta)
        x = torch.ones(1, 3, 2, 2)
        cond = torch.zeros(1, 3, 2, 2)
        out = sft(x, cond)
        expect = torch.tensor([1.0, 3.0, 5.0])[None, :, None, None].expand(1, 3, 2, 2)
        assert torch.allclose(out, expect, atol=1e-6)

    def test_coefficients_depend_on_condition_only(self):
        sft = SftLayer(4)
        cond = torch.randn(1, 4, 3, 3, generator=torch.Generator().manual_seed(4))
        g1, b1 = sft.coefficients(cond)
        g2, b2 = sft.coefficients(cond)
        assert torch.equal(g1, g2) and torch.equal(b1, b2)


def test_residual_block_zeroed_is_identity():
    rb = ResidualBlock(5)
    rb.zero_()
    x = torch.randn(2, 5, 4, 4, generator=torch.Generator().manual_seed(5))
    assert torch.equal(rb(x), x)


def test_attention_gate_override():
    att = ChannelAttention(8)
    x = torch.randn(1, 8, 3, 3, generator=torch.Generator().manual_seed(6))
    att.gate_override = 1.0
    assert torch.equal(att(x), x)
    att.gate_override = 0.5
    assert torch.allclose(att(x), 0.5 * x)
    att.gate_override = None
    gated = att(x)
    # sigmoid gate lies strictly inside (0, 1): magnitudes shrink
    assert torch.all(gated.abs() <= x.abs() + 1e-7)


def test_attention_reduction_floor():
    att = ChannelAttention(2, reduction=4)  # mid floors at 1
    x = torch.randn(1, 2, 2, 2)
    assert att(x).shape == x.shape


class TestFrm:
    def test_modulate_validation(self):
        with pytest.raises(ValueError):
            Frm(4, modulate="both")

    def test_identity_wiring_is_exact_on_kept_channels(self):
        frm = Frm(6)
        frm.force_identity()
        f_m, f_lq = _pair()
        m = ChannelMask.from_string("110011")
        out = reconstruct(frm, f_m, f_lq, m)
        filled = fill_missing(f_m, f_lq, m)
        assert np.allclose(out.data, filled.data.astype(np.float32), atol=1e-6)

    def test_batch_forward_matches_value_path(self):
        frm = Frm(6)
        f_m, f_lq = _pair(seed=7)
        m = ChannelMask.from_string("101101")
        got = reconstruct(frm, f_m, f_lq, m)
        batch = frm(torch.from_numpy(f_m.data.astype(np.float32)).unsqueeze(0),
                    torch.from_numpy(f_lq.data.astype(np.float32)).unsqueeze(0),
                    torch.from_numpy(m.bits.astype(np.float32)).unsqueeze(0))
        assert np.allclose(batch.squeeze(0).detach().numpy(), got.data, atol=1e-6)

    def test_modulate_texture_changes_output(self):
        f_m, f_lq = _pair(seed=8)
        m = ChannelMask.from_string("111000")
        torch.manual_seed(0)
        a = Frm(6, modulate="reconstructed")
        torch.manual_seed(0)
        b = Frm(6, modulate="texture")
        out_a = reconstruct(a, f_m, f_lq, m)
        out_b = reconstruct(b, f_m, f_lq, m)
        assert not np.allclose(out_a.data, out_b.data)

    def test_gradient_reaches_soft_mask(self):
        frm = Frm(4)
        f_m = torch.randn(2, 4, 3, 3, generator=torch.Generator().manual_seed(9))
        f_lq = torch.randn(2, 4, 3, 3, generator=torch.Generator().manual_seed(10))
        mask = torch.full((2, 4), 0.5, requires_grad=True)
        frm(f_m, f_lq, mask).sum().backward()
        assert mask.grad is not None
        assert mask.grad.abs().sum() > 0

    def test_sft_fuse_then_enhance_equals_reconstruct(self):
        frm = Frm(6)
        f_m, f_lq = _pair(seed=11)
        m = ChannelMask.from_string("011011")
        filled = fill_missing(f_m, f_lq, m)
        manual = enhance(frm, sft_fuse(frm, filled, f_lq))
        assert np.allclose(manual.data, reconstruct(frm, f_m, f_lq, m).data, atol=1e-7)
