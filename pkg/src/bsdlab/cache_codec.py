#!/usr/bin/env python3
# Copyright (c) 2024 ROX Automation
"""
Binary record cache

Layout:
-------
- **Header**: magic ``BSDC``, format version (uint16), reserved (uint16).
- **Records**: tag ``R``, payload length (uint32), payload.
- **Trailer**: tag ``E``, record count (uint64), CRC32 of all payloads (uint32).

Payload:
--------
- label: uint8 length + utf-8 bytes
- a1..a6: big integers, uint16 byte length + little endian two's complement
- fixed block, see `FIXED_FMT`
- generators: ``n_gens`` times [X:Y:Z] as big integers

``n_gens == NO_GENERATORS`` marks a record without generator data.

Bumping the layout requires bumping `VERSION`; readers refuse other versions.
"""
from __future__ import annotations

import logging
import struct
import zlib
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

from bsdlab.ec_core import RationalPoint
from bsdlab.errors import DataError
from bsdlab.records import CurveRecord

VERSION = 1

# -----------------Data Types-----------------
# See https://docs.python.org/3/library/struct.html#format-characters

MAGIC = b"BSDC"
HEADER_FMT = "<4sHH"
RECORD_TAG = b"R"
TRAILER_TAG = b"E"
LENGTH_FMT = "<I"
TRAILER_FMT = "<QI"
LABEL_LEN_FMT = "<B"
BIGINT_LEN_FMT = "<H"

# conductor, rank, torsion, tamagawa, omega, regulator, sha, n_gens
FIXED_FMT = "<IBBIdddB"

NO_GENERATORS = 0xFF
DEFAULT_BATCH = 10_000

log = logging.getLogger(__name__)


class CacheVersionError(DataError):
    """Cache written by a different format version"""


class CacheIntegrityError(DataError):
    """Cache is truncated or corrupted"""


# ----------------------------Encoding----------------------------


def _pack_bigint(value: int) -> bytes:
    size = max(1, (value.bit_length() + 8) // 8)
    return struct.pack(BIGINT_LEN_FMT, size) + value.to_bytes(size, "little", signed=True)


def _unpack_bigint(data: bytes, offset: int) -> tuple[int, int]:
    (size,) = struct.unpack_from(BIGINT_LEN_FMT, data, offset)
    offset += struct.calcsize(BIGINT_LEN_FMT)
    value = int.from_bytes(data[offset : offset + size], "little", signed=True)
    return value, offset + size


def encode_record(record: CurveRecord) -> bytes:
    """Pack a record into payload bytes."""
    label = record.label.encode()
    parts = [struct.pack(LABEL_LEN_FMT, len(label)), label]
    parts.extend(_pack_bigint(a) for a in record.ainvs)

    gens = record.generators
    n_gens = NO_GENERATORS if gens is None else len(gens)
    parts.append(
        struct.pack(
            FIXED_FMT,
            record.conductor,
            record.rank,
            record.torsion_order,
            record.tamagawa_product,
            record.omega,
            record.regulator,
            record.sha_order,
            n_gens,
        )
    )
    for point in gens or ():
        parts.extend(_pack_bigint(v) for v in point.to_projective())
    return b"".join(parts)


def decode_record(data: bytes) -> CurveRecord:
    """Parse a record from payload bytes."""
    try:
        return _decode(data)
    except (struct.error, UnicodeDecodeError, ValueError, ZeroDivisionError) as err:
        raise CacheIntegrityError(f"undecodable record: {err}") from err


def _decode(data: bytes) -> CurveRecord:
    (label_len,) = struct.unpack_from(LABEL_LEN_FMT, data, 0)
    offset = struct.calcsize(LABEL_LEN_FMT)
    label = data[offset : offset + label_len].decode()
    offset += label_len

    ainvs = []
    for _ in range(5):
        value, offset = _unpack_bigint(data, offset)
        ainvs.append(value)

    fixed = struct.unpack_from(FIXED_FMT, data, offset)
    offset += struct.calcsize(FIXED_FMT)
    *bsd, n_gens = fixed

    generators = None
    if n_gens != NO_GENERATORS:
        points = []
        for _ in range(n_gens):
            coords = []
            for _ in range(3):
                value, offset = _unpack_bigint(data, offset)
                coords.append(value)
            points.append(RationalPoint.from_projective(*coords))
        generators = tuple(points)

    if offset != len(data):
        raise CacheIntegrityError(f"record {label}: {len(data) - offset} trailing bytes")
    return CurveRecord(label, *ainvs, *bsd, generators=generators)  # type: ignore[arg-type]


# ----------------------------Files----------------------------


def _read_exact(fh: BinaryIO, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise CacheIntegrityError(f"cache truncated while reading {what}")
    return data


def write_cache(records: Iterable[CurveRecord], path: str | Path) -> Path:
    """Stream records into a cache file, single pass."""
    path = Path(path)
    count = 0
    crc = 0
    with path.open("wb") as fh:
        fh.write(struct.pack(HEADER_FMT, MAGIC, VERSION, 0))
        for record in records:
            payload = encode_record(record)
            fh.write(RECORD_TAG + struct.pack(LENGTH_FMT, len(payload)) + payload)
            crc = zlib.crc32(payload, crc)
            count += 1
        fh.write(TRAILER_TAG + struct.pack(TRAILER_FMT, count, crc))

    log.info(f"wrote {count} records to {path}")
    return path


def read_header(fh: BinaryIO) -> int:
    """check magic and version, return the version"""
    magic, version, _ = struct.unpack(
        HEADER_FMT, _read_exact(fh, struct.calcsize(HEADER_FMT), "header")
    )
    if magic != MAGIC:
        raise CacheIntegrityError(f"not a bsdlab cache (magic {magic!r})")
    if version != VERSION:
        raise CacheVersionError(
            f"cache format version {version}, this reader supports {VERSION}; "
            "re-run `bsdlab ingest` to rebuild the cache"
        )
    return version


def _payloads(fh: BinaryIO) -> Iterator[bytes]:
    """raw record payloads; the trailer is checked once the last one is consumed"""
    length_size = struct.calcsize(LENGTH_FMT)
    trailer_size = struct.calcsize(TRAILER_FMT)

    read_header(fh)
    count = 0
    crc = 0
    while True:
        tag = _read_exact(fh, 1, "record tag")
        if tag == TRAILER_TAG:
            break
        if tag != RECORD_TAG:
            raise CacheIntegrityError(f"unexpected tag {tag!r} after {count} records")
        (size,) = struct.unpack(LENGTH_FMT, _read_exact(fh, length_size, "record length"))
        payload = _read_exact(fh, size, f"record {count}")
        crc = zlib.crc32(payload, crc)
        count += 1
        yield payload

    expected_count, expected_crc = struct.unpack(TRAILER_FMT, _read_exact(fh, trailer_size, "trailer"))
    if expected_count != count or expected_crc != crc:
        raise CacheIntegrityError(
            f"cache trailer mismatch: {count} records read, {expected_count} expected"
        )
    if fh.read(1):
        raise CacheIntegrityError("data after cache trailer")


def verify_cache(path: str | Path) -> int:
    """Check framing, count and CRC without decoding. Returns the record count."""
    with Path(path).open("rb") as fh:
        return sum(1 for _ in _payloads(fh))


def iter_cache(path: str | Path, batch_size: int = DEFAULT_BATCH) -> Iterator[list[CurveRecord]]:
    """Yield records in batches of at most `batch_size`.

    The whole file is verified before the first batch is yielded.
    """
    verify_cache(path)
    with Path(path).open("rb") as fh:
        batch: list[CurveRecord] = []
        for index, payload in enumerate(_payloads(fh)):
            try:
                batch.append(decode_record(payload))
            except CacheIntegrityError as err:
                raise CacheIntegrityError(f"record {index}: {err}") from err
            if len(batch) >= batch_size:
                yield batch
                batch = []
        if batch:
            yield batch


def read_cache(path: str | Path) -> list[CurveRecord]:
    records: list[CurveRecord] = []
    for batch in iter_cache(path):
        records.extend(batch)
    log.debug(f"read {len(records)} records from {path}")
    return records
