"""Feature restoration: fill dropped channels from texture features, then enhance.

The decoder only receives the kept channels.  ``fill_missing`` splices the
texture-derived tensor into the holes, and the FRM refines the merged tensor
with a conditional per-channel affine (SFT), a residual block, a residual
3x3 conv branch, and squeeze-excitation channel gating.  Every stage keeps
the C x H x W shape.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from .datamodel import ChannelMask, DimensionError, FeatureTensor

__all__ = [
    "SftLayer",
    "ResidualBlock",
    "ChannelAttention",
    "Frm",
    "fill_missing",
    "sft_fuse",
    "enhance",
    "reconstruct",
]

_SLOPE = 0.01


def fill_missing(f_m: FeatureTensor, f_lq: FeatureTensor, m: ChannelMask) -> FeatureTensor:
    """Exact channel partition: kept channels from f_m, dropped ones from f_lq."""
    if f_m.shape != f_lq.shape:
        raise DimensionError(f"shape mismatch: {f_m.shape} vs {f_lq.shape}")
    if m.length != f_m.channels:
        raise DimensionError(f"mask length {m.length} != channels {f_m.channels}")
    keep = m.bits.astype(bool)[:, None, None]
    return FeatureTensor(np.where(keep, f_m.data, f_lq.data))


def _scalar_head(channels: int) -> nn.Sequential:
    """Pooled statistics -> 2C per-channel scalars."""
    return nn.Sequential(
        nn.AdaptiveAvgPool2d(1),
        nn.Conv2d(channels, channels, kernel_size=1),
        nn.ReLU(),
        nn.Conv2d(channels, 2 * channels, kernel_size=1),
    )


class SftLayer(nn.Module):
    """Per-channel affine (gamma, beta) generated from the conditioning tensor."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.condition = _scalar_head(channels)

    def coefficients(self, cond: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        gb = self.condition(cond)
        return gb[:, : self.channels], gb[:, self.channels:]

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        gamma, beta = self.coefficients(cond)
        return gamma * x + beta

    def force_affine(self, gamma: float | np.ndarray, beta: float | np.ndarray) -> None:
        """Pin the condition net to constant coefficients (diagnostic hook)."""
        last = self.condition[-1]
        g = torch.as_tensor(np.broadcast_to(gamma, self.channels).copy(), dtype=torch.float32)
        b = torch.as_tensor(np.broadcast_to(beta, self.channels).copy(), dtype=torch.float32)
        with torch.no_grad():
            last.weight.zero_()
            last.bias.copy_(torch.cat([g, b]))

    def force_identity(self) -> None:
        self.force_affine(1.0, 0.0)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.act = nn.LeakyReLU(_SLOPE)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(self.act(self.conv1(x)))

    def zero_(self) -> None:
        with torch.no_grad():
            for conv in (self.conv1, self.conv2):
                conv.weight.zero_()
                conv.bias.zero_()


class ChannelAttention(nn.Module):
    """Squeeze-excitation gate, reduction 4; ``gate_override`` pins the gate."""

    def __init__(self, channels: int, reduction: int = 4):
        super().__init__()
        mid = max(1, channels // reduction)
        self.net = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(channels, mid, kernel_size=1),
            nn.ReLU(),
            nn.Conv2d(mid, channels, kernel_size=1),
            nn.Sigmoid(),
        )
        self.gate_override: float | None = None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.gate_override is not None:
            return x * self.gate_override
        return x * self.net(x)


class Frm(nn.Module):
    """SFT fusion, residual block, residual conv branch, channel attention.

    ``modulate`` picks which tensor the affine acts on: the filled feature
    tensor ("reconstructed", default) or the texture features ("texture").
    Both read the coefficients from the texture features.
    """

    def __init__(self, channels: int, modulate: str = "reconstructed"):
        super().__init__()
        if modulate not in ("reconstructed", "texture"):
            raise ValueError(f"modulate must be 'reconstructed' or 'texture', got {modulate!r}")
        self.channels = channels
        self.modulate = modulate
        self.sft = SftLayer(channels)
        self.resblock = ResidualBlock(channels)
        self.post_conv = nn.Conv2d(channels, channels, kernel_size=3, padding=1)
        self.act = nn.LeakyReLU(_SLOPE)
        self.attention = ChannelAttention(channels)

    def fuse_t(self, f_hat: torch.Tensor, f_lq: torch.Tensor) -> torch.Tensor:
        target = f_hat if self.modulate == "reconstructed" else f_lq
        return self.sft(target, f_lq)

    def enhance_t(self, x: torch.Tensor) -> torch.Tensor:
        h = self.resblock(x)
        h = h + self.act(self.post_conv(h))
        return self.attention(h)

    def forward(self, f_m: torch.Tensor, f_lq: torch.Tensor,
                mask: torch.Tensor) -> torch.Tensor:
        """Batch path with a differentiable (N, C) mask; used in training."""
        keep = mask[:, :, None, None]
        filled = keep * f_m + (1.0 - keep) * f_lq
        return self.enhance_t(self.fuse_t(filled, f_lq))

    def force_identity(self) -> None:
        """Make the whole module a no-op: affine 1/0, zero branches, gate 1."""
        self.sft.force_identity()
        self.resblock.zero_()
        with torch.no_grad():
            self.post_conv.weight.zero_()
            self.post_conv.bias.zero_()
        self.attention.gate_override = 1.0


def _as_batch(f: FeatureTensor) -> torch.Tensor:
    return torch.from_numpy(f.data.astype(np.float32)).unsqueeze(0)


def _check_pair(a: FeatureTensor, b: FeatureTensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def sft_fuse(frm: Frm, f_hq_hat: FeatureTensor, f_lq: FeatureTensor) -> FeatureTensor:
    _check_pair(f_hq_hat, f_lq)
    with torch.no_grad():
        out = frm.fuse_t(_as_batch(f_hq_hat), _as_batch(f_lq))
    return FeatureTensor(out.squeeze(0).numpy())


def enhance(frm: Frm, f_fusion: FeatureTensor) -> FeatureTensor:
    with torch.no_grad():
        out = frm.enhance_t(_as_batch(f_fusion))
    return FeatureTensor(out.squeeze(0).numpy())


def reconstruct(frm: Frm, f_m: FeatureTensor, f_lq: FeatureTensor,
                m: ChannelMask) -> FeatureTensor:
    """fill -> fuse -> enhance; the full decoder-side feature path."""
    filled = fill_missing(f_m, f_lq, m)
    return enhance(frm, sft_fuse(frm, filled, f_lq))
