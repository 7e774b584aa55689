"""Bit-exact serialization of the feature bundle.

Layout (all multi-byte integers little-endian):

    offset  size        field
    0       4           magic "TGFC"
    4       1           version (currently 1)
    5       2           C   feature channel count
    7       2           H   channel height
    9       2           W   channel width
    11      ceil(C/8)   mask bitmap, bit i = channel i kept, MSB-first per byte
    ...     8 * M       per kept channel: float32 min_val, float32 logmax,
                        ascending channel order
    ...     1           codec_id
    ...     4           payload_len (uint32)
    ...     payload_len codec payload bytes

With zero kept channels the payload is empty and no backend is invoked.
"""

from __future__ import annotations

import struct

import numpy as np

from ..datamodel import ChannelMask, FeatureTensor, QuantParams
from .backends import CodecBackend
from .quantize import compute_quant_params
from .tiling import layout_for, tile, untile

__all__ = [
    "MAGIC",
    "VERSION",
    "ContainerFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedStreamError",
    "UnknownCodecError",
    "CapacityError",
    "container_overhead_bytes",
    "serialize_container",
    "parse_container",
    "encode_container",
    "decode_container",
]

MAGIC = b"TGFC"
VERSION = 1

_FIXED_HEADER = struct.Struct("<4sB3H")
_TRAILER = struct.Struct("<BI")


class ContainerFormatError(ValueError):
    """Base class for malformed feature streams."""


class BadMagicError(ContainerFormatError):
    pass


class UnsupportedVersionError(ContainerFormatError):
    pass


class TruncatedStreamError(ContainerFormatError):
    pass


class UnknownCodecError(ContainerFormatError):
    def __init__(self, codec_id: int):
        super().__init__(f"unknown codec id 0x{codec_id:02X}")
        self.codec_id = codec_id


class CapacityError(ValueError):
    """A field value exceeds its wire representation."""


def container_overhead_bytes(channels: int, kept: int) -> int:
    """Header + mask + quant-param side-info bytes, excluding the payload."""
    return _FIXED_HEADER.size + (channels + 7) // 8 + 8 * kept + _TRAILER.size


def serialize_container(m: ChannelMask, q: QuantParams, shape: tuple[int, int, int],
                        codec_id: int, payload: bytes) -> bytes:
    channels, height, width = shape
    if m.length != channels:
        raise CapacityError(f"mask length {m.length} != channel count {channels}")
    if q.count != m.kept_count:
        raise CapacityError(f"{q.count} quant records for {m.kept_count} kept channels")
    for dim in (channels, height, width):
        if not 1 <= dim <= 0xFFFF:
            raise CapacityError(f"dimension {dim} exceeds uint16 range")
    if len(payload) > 0xFFFFFFFF:
        raise CapacityError(f"payload of {len(payload)} bytes exceeds uint32 length field")
    if not 0 <= codec_id <= 0xFF:
        raise CapacityError(f"codec id {codec_id} exceeds one byte")

    parts = [_FIXED_HEADER.pack(MAGIC, VERSION, channels, height, width)]
    parts.append(np.packbits(m.bits).tobytes())
    params = np.empty(2 * q.count, dtype="<f4")
    params[0::2] = q.min_vals
    params[1::2] = q.logmaxes
    parts.append(params.tobytes())
    parts.append(_TRAILER.pack(codec_id, len(payload)))
    parts.append(payload)
    return b"".join(parts)


def parse_container(data: bytes) -> tuple[ChannelMask, QuantParams, tuple[int, int, int], int, bytes]:
    """Split a container into (mask, quant params, shape, codec_id, payload)."""
    if len(data) < _FIXED_HEADER.size:
        raise TruncatedStreamError(f"stream of {len(data)} bytes is shorter than the fixed header")
    magic, version, channels, height, width = _FIXED_HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    if min(channels, height, width) < 1:
        raise ContainerFormatError(f"invalid dims C={channels} H={height} W={width}")

    pos = _FIXED_HEADER.size
    mask_len = (channels + 7) // 8
    if len(data) < pos + mask_len:
        raise TruncatedStreamError("stream ends inside the mask bitmap")
    bits = np.unpackbits(np.frombuffer(data, np.uint8, mask_len, pos))[:channels]
    mask = ChannelMask(bits)
    pos += mask_len

    kept = mask.kept_count
    if len(data) < pos + 8 * kept:
        raise TruncatedStreamError("stream ends inside the quant params")
    params = np.frombuffer(data, "<f4", 2 * kept, pos)
    q = QuantParams(mask.kept_indices().astype(np.int64), params[0::2], params[1::2])
    pos += 8 * kept

    if len(data) < pos + _TRAILER.size:
        raise TruncatedStreamError("stream ends inside the codec/length fields")
    codec_id, payload_len = _TRAILER.unpack_from(data, pos)
    pos += _TRAILER.size
    if len(data) < pos + payload_len:
        raise TruncatedStreamError(f"payload truncated: have {len(data) - pos} of {payload_len} bytes")
    payload = data[pos:pos + payload_len]
    return mask, q, (channels, height, width), codec_id, payload


def encode_container(f: FeatureTensor, m: ChannelMask, backend: CodecBackend) -> bytes:
    """Quantize + tile the kept channels of ``f``, run the backend, serialize."""
    q = compute_quant_params(f, m)
    if q.count == 0:
        payload = b""
    else:
        payload = backend.encode_frame(tile(f, m, q))
    return serialize_container(m, q, f.shape, backend.codec_id, payload)


def decode_container(data: bytes, registry: dict[int, CodecBackend]) -> tuple[FeatureTensor, ChannelMask, QuantParams]:
    """Inverse of :func:`encode_container`; dropped channels come back all-zero."""
    mask, q, (channels, height, width), codec_id, payload = parse_container(data)
    if q.count == 0:
        return FeatureTensor(np.zeros((channels, height, width))), mask, q
    backend = registry.get(codec_id)
    if backend is None:
        raise UnknownCodecError(codec_id)
    layout = layout_for(q.count, height, width)
    frame = backend.decode_frame(payload, layout)
    return untile(frame, mask, q), mask, q
