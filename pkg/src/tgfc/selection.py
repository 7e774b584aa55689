"""Learned per-channel keep/drop selection.

A small scorer turns globally pooled feature statistics into one (keep, drop)
logit pair per channel.  During training the pairs are sampled with the
Gumbel-Softmax straight-through estimator so the binary mask stays on the
forward path while gradients flow through the soft relaxation; at encode time
selection is the deterministic argmax of the same logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .datamodel import ChannelMask, DataError, FeatureTensor, ImportanceLogits

__all__ = [
    "GumbelConfig",
    "ChannelScorer",
    "gumbel_sample",
    "sample_mask",
    "importance_forward",
    "select_channels",
    "select_channels_argmax",
]

_EPS = 1e-20


@dataclass(frozen=True)
class GumbelConfig:
    tau: float = 1.0
    hard: bool = True

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise DataError(f"tau must be positive, got {self.tau}")


class ChannelScorer(nn.Module):
    """Pooled statistics -> (keep, drop) logit pair per channel."""

    def __init__(self, channels: int, mid_channels: int | None = None):
        super().__init__()
        if channels < 1:
            raise DataError(f"channels must be >= 1, got {channels}")
        mid = channels if mid_channels is None else mid_channels
        if mid < 1:
            raise DataError(f"mid_channels must be >= 1, got {mid}")
        self.channels = channels
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.net = nn.Sequential(
            nn.Conv2d(channels, mid, kernel_size=1),
            nn.BatchNorm2d(mid),
            nn.ReLU(),
            nn.Conv2d(mid, 2 * channels, kernel_size=1),
        )

    def forward(self, feats: torch.Tensor) -> torch.Tensor:
        """(N, C, H, W) -> (N, 2C) raw logits; first C entries favor keeping."""
        if feats.ndim != 4 or feats.shape[1] != self.channels:
            raise DataError(
                f"expected (N, {self.channels}, H, W) features, got {tuple(feats.shape)}")
        return self.net(self.pool(feats)).flatten(1)

    def paired(self, logits: torch.Tensor) -> torch.Tensor:
        """(N, 2C) -> (N, C, 2) with [..., 0] = keep and [..., 1] = drop."""
        return torch.stack([logits[:, : self.channels], logits[:, self.channels:]], dim=-1)


def gumbel_sample(pair_logits: torch.Tensor, config: GumbelConfig,
                  generator: torch.Generator | None = None) -> torch.Tensor:
    """Sample one-hot decisions from (.., 2) logit pairs.

    With ``hard`` the forward value is exactly one-hot while the backward pass
    sees the tempered softmax, the usual straight-through coupling.
    """
    u = torch.rand(pair_logits.shape, generator=generator, dtype=pair_logits.dtype)
    g = -torch.log(-torch.log(u + _EPS) + _EPS)
    y_soft = torch.softmax((pair_logits + g) / config.tau, dim=-1)
    if not config.hard:
        return y_soft
    index = y_soft.argmax(dim=-1, keepdim=True)
    y_hard = torch.zeros_like(y_soft).scatter_(-1, index, 1.0)
    return y_hard - y_soft.detach() + y_soft


def sample_mask(scorer: ChannelScorer, feats: torch.Tensor, config: GumbelConfig,
                generator: torch.Generator | None = None) -> torch.Tensor:
    """(N, C) keep indicators with straight-through gradients; training path."""
    pairs = scorer.paired(scorer(feats))
    return gumbel_sample(pairs, config, generator)[..., 0]


def importance_forward(scorer: ChannelScorer, f: FeatureTensor) -> ImportanceLogits:
    """Deterministic logits for one feature tensor (scorer in eval mode)."""
    was_training = scorer.training
    scorer.eval()
    try:
        with torch.no_grad():
            logits = scorer(torch.from_numpy(
                f.data.astype(np.float32)).unsqueeze(0)).squeeze(0)
    finally:
        scorer.train(was_training)
    c = scorer.channels
    arr = logits.numpy().astype(np.float64)
    return ImportanceLogits(arr[:c], arr[c:])


def select_channels(f: FeatureTensor, scorer: ChannelScorer, config: GumbelConfig,
                    seed: int | None = None) -> tuple[ChannelMask, ImportanceLogits]:
    """Stochastic selection for one image; seeded for reproducible encodes."""
    logits = importance_forward(scorer, f)
    pair = torch.from_numpy(
        np.stack([logits.select_logits, logits.reject_logits], axis=-1)).unsqueeze(0)
    gen = None
    if seed is not None:
        gen = torch.Generator()
        gen.manual_seed(seed)
    keep = gumbel_sample(pair, config, gen)[0, :, 0]
    bits = (keep.numpy() > 0.5).astype(np.uint8)
    return ChannelMask(bits), logits


def select_channels_argmax(f: FeatureTensor,
                           scorer: ChannelScorer) -> tuple[ChannelMask, ImportanceLogits]:
    """Noise-free selection: keep channel i iff select_i >= reject_i."""
    logits = importance_forward(scorer, f)
    bits = (logits.select_logits >= logits.reject_logits).astype(np.uint8)
    return ChannelMask(bits), logits
