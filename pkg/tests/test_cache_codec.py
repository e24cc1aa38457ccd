import struct
import zlib
from pathlib import Path

import pytest

from bsdlab import cache_codec as codec
from bsdlab.ec_core import RationalPoint

from tests.conftest import LARGE_A4, LARGE_A6, make_record, synthetic_records


def test_round_trip(cache_file: Path, curves) -> None:  # type: ignore[no-untyped-def]
    records = codec.read_cache(cache_file)
    assert records == list(curves.values())
    assert records[1].generators == (RationalPoint(0, 0),)
    assert records[0].generators is None


def test_big_integers(tmp_path: Path) -> None:
    big = make_record(
        "big",
        (1, 0, 0, LARGE_A4, LARGE_A6),
        generators=(RationalPoint.from_projective(-(10**40), 3**60, 7**20),),
        rank=1,
    )
    assert codec.decode_record(codec.encode_record(big)) == big

    first = codec.write_cache([big], tmp_path / "a.bsdc").read_bytes()
    [again] = codec.read_cache(tmp_path / "a.bsdc")
    assert codec.write_cache([again], tmp_path / "b.bsdc").read_bytes() == first


def test_batches(tmp_path: Path) -> None:
    records = synthetic_records(2500, seed=2)
    path = codec.write_cache(records, tmp_path / "many.bsdc")
    batches = list(codec.iter_cache(path, batch_size=1000))
    assert [len(b) for b in batches] == [1000, 1000, 500]
    assert [r for b in batches for r in b] == records


def test_empty_cache(tmp_path: Path) -> None:
    path = codec.write_cache([], tmp_path / "empty.bsdc")
    assert codec.read_cache(path) == []


def test_version_mismatch(cache_file: Path) -> None:
    data = bytearray(cache_file.read_bytes())
    struct.pack_into("<H", data, 4, codec.VERSION + 1)
    cache_file.write_bytes(bytes(data))
    with pytest.raises(codec.CacheVersionError, match="version"):
        codec.read_cache(cache_file)


def test_bad_magic(cache_file: Path) -> None:
    data = cache_file.read_bytes()
    cache_file.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(codec.CacheIntegrityError):
        codec.read_cache(cache_file)


def test_truncated(cache_file: Path) -> None:
    data = cache_file.read_bytes()
    cache_file.write_bytes(data[: len(data) // 2])
    with pytest.raises(codec.CacheIntegrityError, match="truncated"):
        codec.read_cache(cache_file)


def test_corrupted_payload(cache_file: Path) -> None:
    data = bytearray(cache_file.read_bytes())
    # flip a bit inside the first label
    data[struct.calcsize(codec.HEADER_FMT) + 1 + struct.calcsize(codec.LENGTH_FMT) + 1] ^= 0x01
    cache_file.write_bytes(bytes(data))
    with pytest.raises(codec.CacheIntegrityError):
        codec.read_cache(cache_file)


PAYLOAD_START = struct.calcsize(codec.HEADER_FMT) + 1 + struct.calcsize(codec.LENGTH_FMT)


def frame(payloads: list[bytes]) -> bytes:
    """a cache file around raw payloads, with a matching trailer"""
    parts = [struct.pack(codec.HEADER_FMT, codec.MAGIC, codec.VERSION, 0)]
    crc = 0
    for payload in payloads:
        parts.append(codec.RECORD_TAG + struct.pack(codec.LENGTH_FMT, len(payload)) + payload)
        crc = zlib.crc32(payload, crc)
    parts.append(codec.TRAILER_TAG + struct.pack(codec.TRAILER_FMT, len(payloads), crc))
    return b"".join(parts)


def label_length_corrupted(payload: bytes) -> bytes:
    return b"\xff" + payload[1:]


def bigint_length_corrupted(payload: bytes) -> bytes:
    (label_len,) = struct.unpack_from(codec.LABEL_LEN_FMT, payload, 0)
    high = 1 + label_len + 1
    return payload[:high] + b"\xff" + payload[high + 1 :]


@pytest.mark.parametrize("corrupt", [label_length_corrupted, bigint_length_corrupted])
def test_undecodable_payload(curves, corrupt) -> None:  # type: ignore[no-untyped-def]
    payload = corrupt(codec.encode_record(curves["11a1"]))
    with pytest.raises(codec.CacheIntegrityError):
        codec.decode_record(payload)


@pytest.mark.parametrize("corrupt", [label_length_corrupted, bigint_length_corrupted])
def test_corrupted_length_fields(cache_file: Path, corrupt) -> None:  # type: ignore[no-untyped-def]
    data = cache_file.read_bytes()
    (size,) = struct.unpack_from(codec.LENGTH_FMT, data, PAYLOAD_START - struct.calcsize(codec.LENGTH_FMT))
    payload = corrupt(data[PAYLOAD_START : PAYLOAD_START + size])
    cache_file.write_bytes(data[:PAYLOAD_START] + payload + data[PAYLOAD_START + size :])
    with pytest.raises(codec.CacheIntegrityError, match="trailer"):
        codec.read_cache(cache_file)


def test_undecodable_record_with_valid_trailer(tmp_path: Path, curves) -> None:  # type: ignore[no-untyped-def]
    good = codec.encode_record(curves["11a1"])
    path = tmp_path / "framed.bsdc"
    path.write_bytes(frame([good, bigint_length_corrupted(good)]))
    assert codec.verify_cache(path) == 2
    with pytest.raises(codec.CacheIntegrityError, match="record 1"):
        codec.read_cache(path)


def test_nothing_yielded_from_corrupt_file(tmp_path: Path) -> None:
    path = codec.write_cache(synthetic_records(2500, seed=3), tmp_path / "many.bsdc")
    data = bytearray(path.read_bytes())
    trailer = 1 + struct.calcsize(codec.TRAILER_FMT)
    data[-trailer - 1] ^= 0x01  # last byte of the last payload
    path.write_bytes(bytes(data))

    batches = codec.iter_cache(path, batch_size=1000)
    with pytest.raises(codec.CacheIntegrityError):
        next(batches)


def test_data_after_trailer(cache_file: Path) -> None:
    cache_file.write_bytes(cache_file.read_bytes() + b"\x00")
    with pytest.raises(codec.CacheIntegrityError, match="after cache trailer"):
        codec.read_cache(cache_file)
