import struct
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kiro_leno.operator_learning.dataset.container import decode, encode, read_container, write_container
from kiro_leno.operator_learning.errors import ChecksumError, FormatError, TruncatedFileError, VersionMismatchError
from kiro_leno.operator_learning.hashing import FNV_OFFSET_BASIS, FNV_PRIME, fnv1a_64, format_hash, hash_arrays


@pytest.fixture
def blob() -> bytes:
    data, _ = encode("dataset", {"a": np.arange(6.0).reshape(2, 3), "empty": np.zeros((0, 4))}, {"note": "x"})
    return data


@pytest.mark.parametrize(
    "chunks, expected",
    [
        ([b""], 0xCBF29CE484222325),
        ([b"a"], 0xAF63DC4C8601EC8C),
        ([b"foobar"], 0x85944171F73967E8),
        ([b"foo", b"bar"], 0x85944171F73967E8),
    ],
)
def test_fnv1a_reference_vectors(chunks, expected):
    assert fnv1a_64(chunks) == expected


def test_hash_formatting():
    assert format_hash(0) == "0x0000000000000000"
    assert hash_arrays([np.ones(2)]) == format_hash(fnv1a_64([np.ones(2).tobytes()]))


def _fnv1a_bytewise(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) % 2**64
    return h


@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=300), st.integers(min_value=0, max_value=300))
def test_fnv1a_matches_bytewise_definition(data, cut):
    cut = min(cut, len(data))
    assert fnv1a_64([data]) == _fnv1a_bytewise(data)
    assert fnv1a_64([data[:cut], memoryview(data)[cut:]]) == _fnv1a_bytewise(data)


def test_hash_arrays_reads_array_buffers():
    a = np.linspace(-1.0, 1.0, 24).reshape(2, 3, 4)
    b = np.asfortranarray(a)
    expected = format_hash(_fnv1a_bytewise(a.astype("<f8").tobytes() + np.arange(3.0).tobytes()))
    assert hash_arrays([a, np.arange(3)]) == expected
    assert hash_arrays([b, np.arange(3.0)]) == expected
    assert hash_arrays([np.zeros((0, 5))]) == format_hash(FNV_OFFSET_BASIS)


def test_large_payload_hashes_quickly():
    payload = np.random.default_rng(0).standard_normal(2**21)  # 16 MiB
    fnv1a_64([np.ones(4)])  # compile outside the timed call
    start = time.perf_counter()
    first = fnv1a_64([payload])
    assert time.perf_counter() - start < 2.0
    half = payload.size // 2
    assert fnv1a_64([payload[:half], payload[half:]]) == first


def test_round_trip(tmp_path):
    arrays = {"a": np.arange(6.0).reshape(2, 3), "b": np.array(2.5)}
    meta = {"scale": np.float64(1.5), "where": Path("runs/x"), "shape": (2, 3)}
    digest = write_container(tmp_path / "c.leno", "basis", arrays, meta)
    c = read_container(tmp_path / "c.leno", "basis")
    assert c.kind == "basis" and c.hash == digest
    np.testing.assert_array_equal(c.arrays["a"], arrays["a"])
    assert c.arrays["b"].shape == ()
    assert c.meta == {"scale": 1.5, "where": "runs/x", "shape": [2, 3]}


def test_empty_arrays_survive(blob):
    assert decode(blob).arrays["empty"].shape == (0, 4)


def test_flipped_payload_byte_is_a_checksum_error(blob):
    corrupted = bytearray(blob)
    corrupted[-1] ^= 0xFF
    with pytest.raises(ChecksumError):
        decode(bytes(corrupted))


def test_short_payload_is_truncated(blob):
    with pytest.raises(TruncatedFileError):
        decode(blob[:-8])
    with pytest.raises(TruncatedFileError):
        decode(blob + b"\0" * 8)
    with pytest.raises(TruncatedFileError):
        decode(blob[:12])
    with pytest.raises(TruncatedFileError):
        decode(b"LEN")


def test_bad_magic(blob):
    with pytest.raises(FormatError) as info:
        decode(b"NOPE!" + blob[5:])
    assert not isinstance(info.value, TruncatedFileError)
    with pytest.raises(FormatError):
        decode(b"abc")


def test_unsupported_version(blob):
    with pytest.raises(VersionMismatchError, match="version 2"):
        decode(blob[:5] + struct.pack("<I", 2) + blob[9:])


def test_malformed_header(blob):
    (header_len,) = struct.unpack_from("<I", blob, 9)
    garbage = b"{" * header_len
    with pytest.raises(FormatError, match="invalid container header"):
        decode(blob[:13] + garbage + blob[13 + header_len :])


def test_kind_is_checked_on_read(tmp_path):
    write_container(tmp_path / "b.leno", "basis", {"x": np.ones(1)})
    with pytest.raises(FormatError, match="expected 'model'"):
        read_container(tmp_path / "b.leno", "model")


def test_unknown_kind_and_missing_file(tmp_path):
    with pytest.raises(FormatError):
        encode("weights", {})
    with pytest.raises(FileNotFoundError):
        read_container(tmp_path / "absent.leno")
