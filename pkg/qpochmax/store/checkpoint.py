"""
Binary checkpoints of a HalfPoly.

Layout (little-endian):
    b"QPNB" | u32 version | u64 n | u64 count
    count x ( i8 sign | u32 byte_len | byte_len magnitude bytes )
    u64 CRC-64 over every preceding byte
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import crcmod.predefined

from qpochmax.common import (
    BadMagicError,
    CheckpointError,
    ChecksumMismatchError,
    HalfPoly,
    PrefixViolationError,
    TruncatedCheckpointError,
    VersionMismatchError,
    half_index,
)
from qpochmax.engine.expansion import pentagonal_coefficient

MAGIC = b"QPNB"
VERSION = 1
DEFAULT_PREFIX_CHECK = 10_000

_HEADER = struct.Struct("<4sIQQ")
_ENTRY = struct.Struct("<bI")
_TRAILER = struct.Struct("<Q")

crc64 = crcmod.predefined.mkPredefinedCrcFun("crc-64")


@dataclass(frozen=True)
class CheckpointInfo:
    path: Path
    n: int
    count: int
    size: int
    crc: int


def checkpoint_path(directory: Path | str, n: int) -> Path:
    return Path(directory) / f"qpoch_{n:07d}.qpnb"


def encode_checkpoint(p: HalfPoly) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, p.n, len(p.coeffs))]
    for value in p.coeffs:
        value = int(value)
        magnitude = abs(value)
        raw = magnitude.to_bytes((magnitude.bit_length() + 7) // 8, "little")
        sign = (value > 0) - (value < 0)
        parts.append(_ENTRY.pack(sign, len(raw)))
        parts.append(raw)
    body = b"".join(parts)
    return body + _TRAILER.pack(crc64(body))


def save_checkpoint(p: HalfPoly, path: Path | str) -> Path:
    """Writes p atomically: temp file, fsync, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(p)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(temp_path, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp_path, path)
    finally:
        if temp_path.exists():
            os.remove(temp_path)
    logging.info(f"Saved checkpoint n={p.n} ({len(data)} bytes) to '{path}'.")
    return path


def decode_checkpoint(data: bytes, prefix_check: int = DEFAULT_PREFIX_CHECK) -> HalfPoly:
    if len(data) < _HEADER.size + _TRAILER.size:
        raise TruncatedCheckpointError(f"Checkpoint is only {len(data)} bytes long.")
    magic, version, n, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"Bad magic {magic!r}, expected {MAGIC!r}.")
    if version != VERSION:
        raise VersionMismatchError(f"Checkpoint version {version}, expected {VERSION}.")
    body = data[: -_TRAILER.size]
    (stored_crc,) = _TRAILER.unpack_from(data, len(data) - _TRAILER.size)
    actual_crc = crc64(body)
    if stored_crc != actual_crc:
        raise ChecksumMismatchError(
            f"Checksum {actual_crc:016x} does not match stored {stored_crc:016x}."
        )
    if count != half_index(n) + 1:
        raise CheckpointError(
            f"Checkpoint for n={n} holds {count} coefficients, expected {half_index(n) + 1}."
        )

    coeffs = []
    offset = _HEADER.size
    for i in range(count):
        if offset + _ENTRY.size > len(body):
            raise TruncatedCheckpointError(f"Payload ends inside entry {i}.")
        sign, length = _ENTRY.unpack_from(body, offset)
        offset += _ENTRY.size
        if offset + length > len(body):
            raise TruncatedCheckpointError(f"Payload ends inside magnitude of entry {i}.")
        if sign not in (-1, 0, 1) or (sign == 0) != (length == 0):
            raise CheckpointError(f"Entry {i} has sign {sign} with {length} bytes.")
        magnitude = int.from_bytes(body[offset : offset + length], "little")
        offset += length
        coeffs.append(sign * magnitude)
    if offset != len(body):
        raise CheckpointError(f"{len(body) - offset} unexpected bytes after the last entry.")

    for i in range(min(n + 1, count, prefix_check)):
        expected = pentagonal_coefficient(i)
        if coeffs[i] != expected:
            raise PrefixViolationError(i, coeffs[i], expected)
    return HalfPoly(n, coeffs)


def load_checkpoint(path: Path | str, prefix_check: int = DEFAULT_PREFIX_CHECK) -> HalfPoly:
    path = Path(path)
    with open(path, "rb") as f:
        data = f.read()
    p = decode_checkpoint(data, prefix_check)
    logging.info(f"Loaded checkpoint n={p.n} from '{path}'.")
    return p


def describe_checkpoint(path: Path | str, prefix_check: int = DEFAULT_PREFIX_CHECK) -> CheckpointInfo:
    """Fully validates a checkpoint and reports its header and trailer."""
    path = Path(path)
    p = load_checkpoint(path, prefix_check)
    data = path.read_bytes()
    (crc,) = _TRAILER.unpack_from(data, len(data) - _TRAILER.size)
    return CheckpointInfo(path=path, n=p.n, count=len(p.coeffs), size=len(data), crc=crc)
