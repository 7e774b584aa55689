"""Texture-guided feature compression: joint machine/human coding of CNN features."""

from .datamodel import (
    ChannelMask,
    ConfigurationError,
    DataError,
    DimensionError,
    FeatureTensor,
    ImportanceLogits,
    QuantParams,
    SourceImage,
    apply_mask,
    complement_mask,
    mask_mean,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelMask",
    "ConfigurationError",
    "DataError",
    "DimensionError",
    "FeatureTensor",
    "ImportanceLogits",
    "QuantParams",
    "SourceImage",
    "apply_mask",
    "complement_mask",
    "mask_mean",
    "__version__",
]
