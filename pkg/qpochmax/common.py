"""
Shared domain types, index helpers and the exception hierarchy.

A `HalfPoly` stores the lower half of the coefficients of
(q;q)_n = (1-q)(1-q^2)...(1-q^n). The upper half is implied by the
symmetry a_{n,i} = (-1)^n a_{n, n(n+1)/2 - i}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


def degree(n: int) -> int:
    """Degree n(n+1)/2 of (q;q)_n."""
    return n * (n + 1) // 2


def half_index(n: int) -> int:
    """Last stored index floor(n(n+1)/4) of the half array."""
    return n * (n + 1) // 4


def as_object_array(values: Sequence[int] | np.ndarray) -> np.ndarray:
    """Converts a sequence of Python ints to a 1-D numpy object array."""
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(v) for v in values]
    return arr


class QPochError(Exception):
    """Base class for every error raised by qpochmax."""


class DomainError(QPochError, ValueError):
    """A precondition on an argument does not hold."""


class CheckpointError(QPochError):
    """A checkpoint file could not be read or failed validation."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class ChecksumMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class PrefixViolationError(CheckpointError):
    """A stored coefficient disagrees with the pentagonal number series."""

    def __init__(self, index: int, found: int, expected: int):
        self.index, self.found, self.expected = index, found, expected
        super().__init__(
            f"Coefficient {index} is {found}, pentagonal series requires {expected}."
        )


class RecordLogError(QPochError):
    """A record log is malformed or not contiguous."""


class RecordGapError(RecordLogError):
    pass


class MalformedRowError(RecordLogError):
    pass


class UnknownLetterError(QPochError):
    """A 19-long window of E values does not spell any letter of the alphabet."""

    def __init__(self, window: Sequence[int], start_n: int):
        self.window = tuple(window)
        self.start_n = start_n
        digits = "".join(str(v) for v in self.window)
        super().__init__(f"No letter matches window {digits} starting at n={start_n}.")


class UnclassifiedRowError(QPochError):
    pass


class StreamStartError(QPochError):
    pass


class AlphabetError(QPochError):
    """The built-in letter tables fail their self-test."""


class FitError(QPochError):
    pass


@dataclass(eq=False)
class HalfPoly:
    """Lower half a_{n,0..floor(n(n+1)/4)} of (q;q)_n as an object array of ints."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not isinstance(self.coeffs, np.ndarray) or self.coeffs.dtype != object:
            self.coeffs = as_object_array(self.coeffs)
        if len(self.coeffs) != half_index(self.n) + 1:
            raise DomainError(
                f"HalfPoly for n={self.n} needs {half_index(self.n) + 1} "
                f"coefficients, got {len(self.coeffs)}."
            )

    @property
    def degree(self) -> int:
        return degree(self.n)

    def to_list(self) -> list[int]:
        return [int(c) for c in self.coeffs]

    def copy(self) -> HalfPoly:
        return HalfPoly(self.n, self.coeffs.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HalfPoly):
            return NotImplemented
        return self.n == other.n and self.to_list() == other.to_list()

    def __repr__(self) -> str:
        return f"HalfPoly(n={self.n}, stored={len(self.coeffs)})"


@dataclass(frozen=True)
class FullPoly:
    """Every coefficient of (q;q)_n, produced by the brute-force oracle."""

    n: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != degree(self.n) + 1:
            raise DomainError(
                f"FullPoly for n={self.n} needs {degree(self.n) + 1} coefficients."
            )


@dataclass(frozen=True)
class MaxRecord:
    """Per-n summary of the maximum absolute coefficient M_n and where it first occurs."""

    n: int
    max_abs: int
    first_loc: int
    occurrences: int
    sign_at_first: int


@dataclass
class RecordLog:
    """MaxRecords with strictly increasing, gap-free n."""

    records: list[MaxRecord] = field(default_factory=list)

    def __post_init__(self):
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.n != prev.n + 1:
                raise RecordGapError(
                    f"Record log jumps from n={prev.n} to n={cur.n}."
                )
        self._by_n = {r.n: r for r in self.records}

    def __iter__(self) -> Iterator[MaxRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, n: int) -> bool:
        return n in self._by_n

    def get(self, n: int) -> MaxRecord | None:
        return self._by_n.get(n)

    @property
    def first_n(self) -> int | None:
        return self.records[0].n if self.records else None

    @property
    def last_n(self) -> int | None:
        return self.records[-1].n if self.records else None

    def check_continues(self, records: Sequence[MaxRecord]) -> None:
        """Raises RecordGapError unless `records` continue the n range."""
        expected = None if self.last_n is None else self.last_n + 1
        for record in records:
            if expected is not None and record.n != expected:
                raise RecordGapError(
                    f"Expected a record for n={expected}, got n={record.n}."
                )
            expected = record.n + 1

    def extend(self, records: Sequence[MaxRecord]) -> None:
        self.check_continues(records)
        for record in records:
            self.records.append(record)
            self._by_n[record.n] = record

    def truncated(self, last_n: int) -> RecordLog:
        return RecordLog([r for r in self.records if r.n <= last_n])
