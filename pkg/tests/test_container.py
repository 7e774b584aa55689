"""Wire-format bytes, overhead accounting, and container round trips."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgfc.codec import (
    MAGIC,
    VERSION,
    BadMagicError,
    CapacityError,
    ContainerFormatError,
    DeflateBackend,
    TruncatedStreamError,
    UnknownCodecError,
    UnsupportedVersionError,
    container_overhead_bytes,
    decode_container,
    default_registry,
    encode_container,
    parse_container,
    serialize_container,
)
from tgfc.datamodel import ChannelMask, FeatureTensor, QuantParams


def _simple_container(payload=b"xyz", codec_id=0):
    m = ChannelMask.from_string("1010")
    q = QuantParams(np.array([0, 2]), np.array([0.5, -1.0], np.float32),
                    np.array([2.0, 1.0], np.float32))
    return serialize_container(m, q, (4, 3, 3), codec_id, payload)


def test_golden_header_bytes():
    blob = _simple_container()
    assert blob[:4] == b"TGFC" == MAGIC
    assert blob[4] == 1 == VERSION
    assert struct.unpack_from("<3H", blob, 5) == (4, 3, 3)
    # mask 1010 packs MSB-first into one byte: 0b10100000
    assert blob[11] == 0xA0
    # two float32 pairs follow, little-endian, channel-ascending
    mins_logs = struct.unpack_from("<4f", blob, 12)
    assert mins_logs == (0.5, 2.0, -1.0, 1.0)
    codec_id, payload_len = struct.unpack_from("<BI", blob, 28)
    assert codec_id == 0 and payload_len == 3
    assert blob[33:] == b"xyz"


def test_overhead_formula():
    # fixed header 11 + trailer 5 + mask bytes + 8 per kept channel
    assert container_overhead_bytes(512, 8) == 144
    assert container_overhead_bytes(4, 2) == 11 + 5 + 1 + 16
    blob = _simple_container(payload=b"")
    assert len(blob) == container_overhead_bytes(4, 2)


def test_parse_inverts_serialize():
    blob = _simple_container(payload=b"\x00\x01\x02", codec_id=2)
    m, q, shape, codec_id, payload = parse_container(blob)
    assert str(m) == "1010"
    assert shape == (4, 3, 3)
    assert codec_id == 2
    assert payload == b"\x00\x01\x02"
    assert q.channel_indices.tolist() == [0, 2]
    assert q.min_vals.tolist() == [0.5, -1.0]
    assert q.logmaxes.tolist() == [2.0, 1.0]


def test_quant_params_survive_as_float32():
    m = ChannelMask.from_string("1")
    val = 0.1  # not representable exactly; wire precision is float32
    q = QuantParams(np.array([0]), np.array([val], np.float32), np.array([val], np.float32))
    blob = serialize_container(m, q, (1, 2, 2), 0, b"")
    _, q2, _, _, _ = parse_container(blob)
    assert q2.min_vals[0] == np.float32(val)


class TestParseRejections:
    def test_short_stream(self):
        with pytest.raises(TruncatedStreamError):
            parse_container(b"TGFC\x01")

    def test_bad_magic(self):
        blob = bytearray(_simple_container())
        blob[0] ^= 0xFF
        with pytest.raises(BadMagicError):
            parse_container(bytes(blob))

    def test_bad_version(self):
        blob = bytearray(_simple_container())
        blob[4] = 9
        with pytest.raises(UnsupportedVersionError):
            parse_container(bytes(blob))

    def test_zero_dims(self):
        blob = bytearray(_simple_container())
        blob[5:7] = b"\x00\x00"
        with pytest.raises(ContainerFormatError):
            parse_container(bytes(blob))

    def test_truncated_mask(self):
        blob = _simple_container()
        with pytest.raises(TruncatedStreamError):
            parse_container(blob[:11])

    def test_truncated_params(self):
        blob = _simple_container()
        with pytest.raises(TruncatedStreamError):
            parse_container(blob[:20])

    def test_truncated_payload(self):
        blob = _simple_container(payload=b"abcdef")
        with pytest.raises(TruncatedStreamError):
            parse_container(blob[:-2])

    def test_unknown_codec_id(self):
        f = FeatureTensor(np.random.default_rng(0).uniform(0, 1, (4, 2, 2)))
        blob = encode_container(f, ChannelMask.from_string("1100"), DeflateBackend())
        blob = bytearray(blob)
        # codec id sits right after mask + params: 11 + 1 + 16
        blob[28] = 0x7F
        with pytest.raises(UnknownCodecError):
            decode_container(bytes(blob), default_registry())


class TestSerializeRejections:
    def test_mask_length_mismatch(self):
        m = ChannelMask.from_string("10")
        with pytest.raises(CapacityError):
            serialize_container(m, QuantParams.empty(), (3, 2, 2), 0, b"")

    def test_param_count_mismatch(self):
        m = ChannelMask.from_string("11")
        with pytest.raises(CapacityError):
            serialize_container(m, QuantParams.empty(), (2, 2, 2), 0, b"")

    def test_oversized_dim(self):
        m = ChannelMask(np.ones(2, np.uint8))
        q = QuantParams(np.array([0, 1]), np.zeros(2, np.float32), np.zeros(2, np.float32))
        with pytest.raises(CapacityError):
            serialize_container(m, q, (2, 70000, 2), 0, b"")

    def test_oversized_codec_id(self):
        m = ChannelMask.from_string("0")
        with pytest.raises(CapacityError):
            serialize_container(m, QuantParams.empty(), (1, 1, 1), 300, b"")


def test_zero_kept_channels_roundtrip():
    f = FeatureTensor(np.ones((3, 2, 2)))
    blob = encode_container(f, ChannelMask.from_string("000"), DeflateBackend())
    back, m, q = decode_container(blob, default_registry())
    assert not back.data.any()
    assert q.count == 0
    assert back.shape == (3, 2, 2)


def test_lossless_roundtrip_preserves_requantized_values():
    rng = np.random.default_rng(3)
    f = FeatureTensor(rng.normal(0, 4, (8, 4, 4)))
    m = ChannelMask(rng.integers(0, 2, 8).astype(np.uint8))
    blob = encode_container(f, m, DeflateBackend())
    back, m2, q = decode_container(blob, default_registry())
    assert np.array_equal(m2.bits, m.bits)
    # second pass through the same params is the identity on the wire
    blob2 = encode_container(back, m, DeflateBackend())
    back2, _, _ = decode_container(blob2, default_registry())
    assert np.array_equal(back.data, back2.data)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 16), st.integers(1, 4), st.integers(1, 4),
       st.integers(0, 2**32 - 1))
def test_fuzzed_roundtrip(c, h, w, seed):
    rng = np.random.default_rng(seed)
    f = FeatureTensor(rng.normal(0, 2, (c, h, w)))
    m = ChannelMask(rng.integers(0, 2, c).astype(np.uint8))
    blob = encode_container(f, m, DeflateBackend())
    back, m2, q = decode_container(blob, default_registry())
    assert np.array_equal(m2.bits, m.bits)
    assert back.shape == f.shape
    assert len(blob) >= container_overhead_bytes(c, m.kept_count)
