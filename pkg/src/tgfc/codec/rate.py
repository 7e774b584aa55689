"""Rate accounting: bits per source pixel and compression percentages."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["bpp", "compression_rate", "RateBreakdown"]


def bpp(total_bits: int | float, img_h: int, img_w: int) -> float:
    """Bits per pixel of the original image.

    ``total_bits`` must already count every transmitted stream plus side
    info (mask bitmap and quant params travel inside the feature container).
    """
    if img_h < 1 or img_w < 1:
        raise ValueError(f"image dims must be positive, got {img_h}x{img_w}")
    return total_bits / (img_h * img_w)


def compression_rate(compressed_bytes: int, raw_bytes: int) -> float:
    """Compressed over uncompressed volume, in percent.

    Raw volume convention for features: C*H*W bytes (one byte per value
    after 8-bit quantization).
    """
    if raw_bytes <= 0:
        raise ValueError(f"raw volume must be positive, got {raw_bytes}")
    return compressed_bytes / raw_bytes * 100.0


@dataclass(frozen=True)
class RateBreakdown:
    """Exact bit accounting for one encoded image."""

    feature_payload_bits: int
    feature_side_info_bits: int
    texture_bits: int
    img_h: int
    img_w: int

    @property
    def total_bits(self) -> int:
        return self.feature_payload_bits + self.feature_side_info_bits + self.texture_bits

    @property
    def total_bpp(self) -> float:
        return bpp(self.total_bits, self.img_h, self.img_w)

    @property
    def feature_bpp(self) -> float:
        return bpp(self.feature_payload_bits, self.img_h, self.img_w)

    @property
    def side_info_bpp(self) -> float:
        return bpp(self.feature_side_info_bits, self.img_h, self.img_w)

    @property
    def texture_bpp(self) -> float:
        return bpp(self.texture_bits, self.img_h, self.img_w)
