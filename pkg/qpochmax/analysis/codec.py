"""
Letter encoding of the E_n stream for each odd residue class mod 4.

From n = 209 (class 1) and n = 391 (class 3) the E values E_n, E_{n+4}, ...
fall into 19-long windows, each one of twenty letters a..t. Letters group
into words that start at 'a'. A word's letter counts equal a base vector plus
a 0/1 perturbation vector that cycles with period 11 rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import groupby
from typing import Final, Iterable, Sequence

from qpochmax.analysis.series import ESeries
from qpochmax.common import (
    AlphabetError,
    DomainError,
    StreamStartError,
    UnclassifiedRowError,
    UnknownLetterError,
)

LETTER_LENGTH = 19
LETTER_SPAN = 4 * LETTER_LENGTH
STREAM_START: Final = {1: 209, 3: 391}
ROWS_PER_PERIOD = 11
OUTLIER: Final = "outlier"

ALPHABET: Final = {
    "a": "2112111211121112112",
    "b": "1112111211121112112",
    "c": "1112111211121121112",
    "d": "1112111211211121112",
    "e": "1112112111211121112",
    "f": "1121112111211121112",
    "g": "1121112111211121121",
    "h": "1121112111211211121",
    "i": "1121112112111211121",
    "j": "1121121112111211121",
    "k": "1211121112111211121",
    "l": "1211121112111211211",
    "m": "1211121112112111211",
    "n": "1211121121112111211",
    "o": "1211211121112111211",
    "p": "2111211121112111211",
    "q": "2111211121112112111",
    "r": "2111211121121112111",
    "s": "2111211211121112111",
    "t": "2112111211121112111",
}
SYMBOLS: Final = tuple(ALPHABET)
_BY_PATTERN: Final = {pattern: symbol for symbol, pattern in ALPHABET.items()}

BASE: Final = (1, 3, 4, 4, 4, 3, 4, 4, 4, 4, 3, 4, 4, 4, 4, 3, 4, 4, 4, 3)

# Letters (1-based alphabet positions) added to the base word on each row.
_U_POSITIONS: Final = (
    (2, 9, 15), (3, 9, 16), (3, 10, 16), (4, 10, 17), (4, 11, 18), (5, 12, 18),
    (6, 12, 19), (6, 13, 19), (7, 13, 20), (7, 14, 20), (8, 14),
)
_V_POSITIONS: Final = (
    (4, 11, 17), (5, 11, 18), (5, 12, 19), (6, 13, 19), (7, 13, 20), (7, 14, 20),
    (8, 14), (2, 8, 15), (2, 9, 16), (3, 10, 16), (4, 10, 17),
)
_OUTLIER_POSITIONS: Final = (2, 8, 15)


def _vector(positions: Iterable[int]) -> tuple[int, ...]:
    hit = set(positions)
    return tuple(1 if k + 1 in hit else 0 for k in range(len(SYMBOLS)))


PERTURBATIONS: Final = {
    1: tuple(_vector(p) for p in _U_POSITIONS),
    3: tuple(_vector(p) for p in _V_POSITIONS),
}
OUTLIER_PERTURBATION: Final = _vector(_OUTLIER_POSITIONS)


@dataclass(frozen=True)
class WordRow:
    """One word: letters from an 'a' up to the next 'a'."""

    runs: tuple[tuple[str, int], ...]
    complete: bool = True

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(symbol for symbol, count in self.runs for _ in range(count))

    @property
    def frequency(self) -> tuple[int, ...]:
        counts = dict.fromkeys(SYMBOLS, 0)
        for symbol, count in self.runs:
            counts[symbol] += count
        return tuple(counts.values())


@dataclass(frozen=True)
class PeriodSummary:
    letters: int
    values: int
    span: int
    e_sum: int


def _check_klass(klass: int) -> None:
    if klass not in STREAM_START:
        raise DomainError(f"Residue class must be 1 or 3, got {klass}.")


def check_alphabet() -> None:
    """
    Checks the structural facts of the letter table, raising AlphabetError.

    Every pattern has 19 digits of 1 and 2, 'a' has six 2's, every other
    letter five, and reading a pattern backwards maps b..j onto t..l.
    """
    for symbol, pattern in ALPHABET.items():
        if len(pattern) != LETTER_LENGTH or set(pattern) - {"1", "2"}:
            raise AlphabetError(f"Letter {symbol} has malformed pattern {pattern}.")
        twos = pattern.count("2")
        if twos != (6 if symbol == "a" else 5):
            raise AlphabetError(f"Letter {symbol} has {twos} twos.")
    for left, right in zip(SYMBOLS[1:10], reversed(SYMBOLS[11:])):
        if ALPHABET[left][::-1] != ALPHABET[right]:
            raise AlphabetError(f"Letters {left} and {right} are not reversals.")
    for klass, vectors in PERTURBATIONS.items():
        total = sum(sum(v) for v in vectors)
        if total != 32:
            raise AlphabetError(f"Class {klass} perturbations add {total} letters.")


def tokenize(e: ESeries, klass: int, start_n: int | None = None) -> list[str]:
    """
    Maps consecutive 19-long windows E_s, E_{s+4}, ..., E_{s+72} to letters.

    Stops at the first window that is not fully present in `e`.
    """
    _check_klass(klass)
    start = STREAM_START[klass] if start_n is None else start_n
    if start % 4 != klass:
        raise DomainError(f"start_n={start} is not in residue class {klass} mod 4.")
    letters = []
    window_start = start
    while True:
        ns = [window_start + 4 * j for j in range(LETTER_LENGTH)]
        if any(n not in e for n in ns):
            break
        window = [e[n] for n in ns]
        symbol = _BY_PATTERN.get("".join(str(v) for v in window))
        if symbol is None:
            raise UnknownLetterError(window, window_start)
        letters.append(symbol)
        window_start += LETTER_SPAN
    logging.info(f"Tokenized {len(letters)} class-{klass} letters from n={start}.")
    return letters


def segment_words(letters: Sequence[str]) -> list[WordRow]:
    """Splits a letter stream before every 'a'; the last word is marked incomplete."""
    if not letters:
        return []
    if letters[0] != "a":
        raise StreamStartError(f"Letter stream starts with '{letters[0]}', not 'a'.")
    words: list[list[str]] = []
    for symbol in letters:
        if symbol == "a":
            words.append([])
        words[-1].append(symbol)
    return [
        WordRow(
            runs=tuple((symbol, len(list(group))) for symbol, group in groupby(word)),
            complete=k < len(words) - 1,
        )
        for k, word in enumerate(words)
    ]


def row_frequency(perturbation: Sequence[int]) -> tuple[int, ...]:
    return tuple(b + p for b, p in zip(BASE, perturbation))


def classify_row(w: WordRow, klass: int) -> int | str:
    """Index j in 1..11 with frequency == base + perturbation_j, or OUTLIER."""
    _check_klass(klass)
    freq = w.frequency
    for j, vector in enumerate(PERTURBATIONS[klass], start=1):
        if freq == row_frequency(vector):
            return j
    if klass == 1 and freq == row_frequency(OUTLIER_PERTURBATION):
        return OUTLIER
    raise UnclassifiedRowError(f"Word with counts {freq} matches no class-{klass} row.")


def expected_row_index(row: int, klass: int) -> int | str:
    """Row index the periodic model assigns to the row-th word (1-based) of a class."""
    if klass == 1:
        return OUTLIER if row == 1 else (row - 2) % ROWS_PER_PERIOD + 1
    return (row - 1) % ROWS_PER_PERIOD + 1


def row_letters(frequency: Sequence[int]) -> list[str]:
    """Letters of a word with the given counts, in alphabet order."""
    return [symbol for symbol, count in zip(SYMBOLS, frequency) for _ in range(count)]


def _letters_to_e(letters: Iterable[str]) -> list[int]:
    return [int(digit) for symbol in letters for digit in ALPHABET[symbol]]


@lru_cache(maxsize=None)
def _prelude_values(klass: int) -> tuple[int, ...]:
    if klass == 1:
        return tuple(_letters_to_e(row_letters(row_frequency(OUTLIER_PERTURBATION))))
    return ()


@lru_cache(maxsize=None)
def _period_values(klass: int) -> tuple[int, ...]:
    letters: list[str] = []
    for vector in PERTURBATIONS[klass]:
        letters.extend(row_letters(row_frequency(vector)))
    return tuple(_letters_to_e(letters))


def expected_value(klass: int, n: int) -> int:
    """Modelled E_n for one n of the class."""
    _check_klass(klass)
    start = STREAM_START[klass]
    if n < start or (n - start) % 4:
        raise DomainError(f"n={n} is not on the class-{klass} stream starting at {start}.")
    t = (n - start) // 4
    prelude = _prelude_values(klass)
    if t < len(prelude):
        return prelude[t]
    period = _period_values(klass)
    return period[(t - len(prelude)) % len(period)]


def expected_e(klass: int, n_lo: int, n_hi: int) -> ESeries:
    """Modelled E_n for every n = klass (mod 4) in [n_lo, n_hi]."""
    _check_klass(klass)
    start = STREAM_START[klass]
    if n_lo < start:
        raise DomainError(f"Class-{klass} model starts at n={start}, asked for n={n_lo}.")
    first = n_lo + (klass - n_lo) % 4
    return ESeries({n: expected_value(klass, n) for n in range(first, n_hi + 1, 4)})


def period_summary(klass: int) -> PeriodSummary:
    """Size of one period of the class's E stream, recomputed from the tables."""
    _check_klass(klass)
    values = _period_values(klass)
    letters = len(values) // LETTER_LENGTH
    return PeriodSummary(
        letters=letters, values=len(values), span=4 * len(values), e_sum=sum(values)
    )


def compare_with_model(e: ESeries, klass: int) -> list[tuple[int, int, int]]:
    """(n, measured, modelled) for every class-stream n where they differ."""
    _check_klass(klass)
    start = STREAM_START[klass]
    return [
        (n, value, expected_value(klass, n))
        for n, value in e.items()
        if n >= start and n % 4 == klass and value != expected_value(klass, n)
    ]
