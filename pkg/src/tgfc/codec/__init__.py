"""Feature codec: log-domain quantization, tiling, container serialization,
pluggable frame backends, and rate accounting."""

from .quantize import (quantize_channel, quantize_channel_with_params, dequantize_channel,
                       compute_quant_params, dequant_range, round_half_away)
from .tiling import TileLayout, TiledFrame, ConsistencyError, layout_for, tile, untile
from .backends import (CodecBackend, DeflateBackend, RequantBackend, ExternalBackend,
                       ExternalCodecConfig, BackendError, default_registry)
from .container import (MAGIC, VERSION, ContainerFormatError, BadMagicError,
                        UnsupportedVersionError, TruncatedStreamError, UnknownCodecError,
                        CapacityError, container_overhead_bytes, serialize_container,
                        parse_container, encode_container, decode_container)
from .texture import encode_texture, decode_texture, image_to_uint8, uint8_to_image
from .rate import bpp, compression_rate, RateBreakdown
