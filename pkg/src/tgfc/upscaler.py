"""UNet-style reconstruction of the preview image from texture and features.

The network encodes the decoded low-resolution texture top-down (DCU/DSU),
splices channel-adapted features in at the encoder level whose spatial size
matches them, decodes bottom-up with skip connections (USU), expands by
sub-pixel shuffle (USB), and predicts a residual that is added to the
bilinear-upsampled texture.  Zeroing the final conv therefore makes the whole
network an exact bilinear upsampler, the safe initialization this module
verifies in its tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .datamodel import ConfigurationError, DimensionError, FeatureTensor, SourceImage

__all__ = [
    "IrnnConfig",
    "Dcu",
    "Dsu",
    "Usu",
    "Usb",
    "Irnn",
    "inject_level_for",
    "irnn_forward",
    "irnn_loss",
    "psnr",
]

_SLOPE = 0.01


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class IrnnConfig:
    depth: int = 4
    base_width: int = 64
    upscale: int = 2
    feature_channels: int | None = None
    feature_inject_level: int = 1

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ConfigurationError(f"depth must be >= 1, got {self.depth}")
        if self.base_width < 1:
            raise ConfigurationError(f"base_width must be >= 1, got {self.base_width}")
        if not _is_pow2(self.upscale):
            raise ConfigurationError(f"upscale must be a power of 2, got {self.upscale}")
        if self.feature_channels is not None:
            if self.feature_channels < 1:
                raise ConfigurationError(
                    f"feature_channels must be >= 1, got {self.feature_channels}")
            if not 0 <= self.feature_inject_level <= self.depth:
                raise ConfigurationError(
                    f"feature_inject_level must be in [0, {self.depth}], "
                    f"got {self.feature_inject_level}")

    def width(self, level: int) -> int:
        return self.base_width * (1 << level)


def inject_level_for(texture_size: int, feature_size: int) -> int:
    """Encoder level at which the texture pyramid reaches the feature size."""
    if texture_size < feature_size or texture_size % feature_size:
        raise ConfigurationError(
            f"feature size {feature_size} does not divide texture size {texture_size}")
    ratio = texture_size // feature_size
    if not _is_pow2(ratio):
        raise ConfigurationError(
            f"texture/feature size ratio must be a power of 2, got {ratio}")
    return ratio.bit_length() - 1


class Dcu(nn.Module):
    """Double conv unit: two 3x3 convs, each followed by LeakyReLU."""

    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(cin, cout, kernel_size=3, padding=1), nn.LeakyReLU(_SLOPE),
            nn.Conv2d(cout, cout, kernel_size=3, padding=1), nn.LeakyReLU(_SLOPE),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class Dsu(nn.Module):
    """Down-sampling unit: 2x max pool then DCU."""

    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.pool = nn.MaxPool2d(2)
        self.conv = Dcu(cin, cout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(self.pool(x))


class Usu(nn.Module):
    """Up-sampling unit: bilinear 2x, concat encoder skip, DCU."""

    def __init__(self, cin: int, skip: int, cout: int):
        super().__init__()
        self.conv = Dcu(cin + skip, cout)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        return self.conv(torch.cat([x, skip], dim=1))


class Usb(nn.Module):
    """Up-sampling block: 3x3 conv then sub-pixel shuffle by 2."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, 4 * channels, kernel_size=3, padding=1)
        self.shuffle = nn.PixelShuffle(2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.shuffle(self.conv(x))


class Irnn(nn.Module):
    """Texture+feature fusion UNet emitting a residual over bilinear upsampling."""

    def __init__(self, config: IrnnConfig):
        super().__init__()
        self.config = config
        d, lvl = config.depth, config.feature_inject_level
        widths = [config.width(i) for i in range(d + 1)]
        # channel count actually leaving each encoder level (after any concat)
        out_ch = list(widths)
        if config.feature_channels is not None:
            self.adapter = nn.Conv2d(config.feature_channels, widths[lvl], kernel_size=1)
            out_ch[lvl] *= 2
        else:
            self.adapter = None
        self.enc0 = Dcu(3, widths[0])
        self.down = nn.ModuleList(
            Dsu(out_ch[i], widths[i + 1]) for i in range(d))
        ups: list[Usu] = []
        cur = out_ch[d]
        for level in reversed(range(d)):
            ups.append(Usu(cur, out_ch[level], widths[level]))
            cur = widths[level]
        self.up = nn.ModuleList(ups)
        self.expand = nn.ModuleList(
            Usb(widths[0]) for _ in range(int(math.log2(config.upscale))))
        self.final = nn.Conv2d(widths[0], 3, kernel_size=3, padding=1)

    def zero_residual_(self) -> None:
        """Start as an exact bilinear upsampler."""
        with torch.no_grad():
            self.final.weight.zero_()
            self.final.bias.zero_()

    def forward(self, lr_img: torch.Tensor, feats: torch.Tensor | None = None,
                clamp: bool = True) -> torch.Tensor:
        cfg = self.config
        if self.adapter is not None and feats is None:
            raise DimensionError("this network expects a feature input")
        if self.adapter is None and feats is not None:
            raise DimensionError("this network takes no feature input")
        x = self.enc0(lr_img)
        skips: list[torch.Tensor] = []
        for level in range(cfg.depth + 1):
            if level > 0:
                x = self.down[level - 1](skips[-1])
            if self.adapter is not None and level == cfg.feature_inject_level:
                if feats.shape[-2:] != x.shape[-2:]:
                    raise DimensionError(
                        f"features {tuple(feats.shape[-2:])} do not match encoder level "
                        f"{level} size {tuple(x.shape[-2:])}")
                x = torch.cat([x, self.adapter(feats)], dim=1)
            skips.append(x)
        y = skips[-1]
        for i, usu in enumerate(self.up):
            y = usu(y, skips[cfg.depth - 1 - i])
        for usb in self.expand:
            y = usb(y)
        up = F.interpolate(lr_img, scale_factor=cfg.upscale,
                           mode="bilinear", align_corners=False) if cfg.upscale > 1 else lr_img
        out = self.final(y) + up
        return out.clamp(0.0, 1.0) if clamp else out


def irnn_forward(net: Irnn, lr_img: SourceImage,
                 f: FeatureTensor | None = None) -> SourceImage:
    """Single-image preview reconstruction, clamped to the display range."""
    if lr_img.height % (1 << net.config.depth) or lr_img.width % (1 << net.config.depth):
        raise DimensionError(
            f"{lr_img.height}x{lr_img.width} texture not divisible by 2^depth")
    x = torch.from_numpy(lr_img.pixels.astype(np.float32)).unsqueeze(0)
    ft = None
    if f is not None:
        ft = torch.from_numpy(f.data.astype(np.float32)).unsqueeze(0)
    with torch.no_grad():
        out = net(x, ft, clamp=True)
    return SourceImage(out.squeeze(0).numpy().astype(np.float64))


def irnn_loss(target: SourceImage, recon: SourceImage) -> float:
    """Mean squared error over every pixel position and color channel."""
    if target.pixels.shape != recon.pixels.shape:
        raise DimensionError(
            f"shape mismatch: {target.pixels.shape} vs {recon.pixels.shape}")
    diff = target.pixels - recon.pixels
    return float(np.mean(diff * diff))


def psnr(target: SourceImage, recon: SourceImage) -> float:
    """Peak signal-to-noise ratio on the 8-bit scale; inf for identical images."""
    if target.pixels.shape != recon.pixels.shape:
        raise DimensionError(
            f"shape mismatch: {target.pixels.shape} vs {recon.pixels.shape}")
    diff = (target.pixels - recon.pixels) * 255.0
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0 ** 2 / mse)
