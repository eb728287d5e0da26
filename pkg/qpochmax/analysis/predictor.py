"""
Closed-form and model-driven prediction of L(n), the first location of M_n.

Even n >= 34 peak at floor(n(n+1)/4). Odd n are predicted from a seed D_m
of the same residue class plus the modelled E values between m and n;
seeds repeat every period of 62,624 with D growing by 19,787.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from qpochmax.analysis import codec
from qpochmax.analysis.series import D_START, doubled_d, location_from_e
from qpochmax.common import DomainError, MaxRecord, RecordLog, degree, half_index

PERIOD = 62_624
PERIOD_E_SUM = 19_787
WORD_STRIDE = 5_700
SHORT_WORD = 76
# Class-1 period as printed in some seed tables; a misprint of PERIOD.
MISPRINTED_PERIOD = 68_324

EVEN_START = 34

# Seed values D_n as tabulated, halves included.
SEED_SOURCE: Mapping[int, str] = {
    5909: "1867.5",
    11609: "3668.5",
    17309: "5469.5",
    23009: "7270.5",
    28709: "9071.5",
    34409: "9675.5",
    40109: "12673.5",
    45809: "14474.5",
    51509: "16275.5",
    57209: "18076.5",
    62833: "19853.5",
    391: "124",
    6091: "1925",
    11791: "3726",
    17491: "5527",
    23191: "7328",
    28891: "9129",
    34591: "10930",
    40215: "12707",
    45915: "14508",
    51615: "16309",
    57315: "18110",
}

# Seeds at or past these n lie inside the periodic regime and may be shifted by PERIOD.
PERIODIC_FROM = {1: 5909, 3: 391}


def _double(value: str) -> int:
    doubled = 2 * Fraction(value)
    if doubled.denominator != 1:
        raise DomainError(f"Seed value {value} is not a half-integer.")
    return int(doubled)


@dataclass(frozen=True)
class SeedTable:
    """2 D_n for seed n; `measured` marks entries read from records."""

    two_d: Mapping[int, int]
    measured: frozenset[int] = frozenset()

    @classmethod
    def default(cls) -> SeedTable:
        return cls({n: _double(v) for n, v in SEED_SOURCE.items()})

    def for_class(self, klass: int) -> list[tuple[int, int]]:
        return sorted((n, v) for n, v in self.two_d.items() if n % 4 == klass)

    def with_measured(self, measured: Mapping[int, int]) -> SeedTable:
        """Adds measured seeds; tabulated entries win on overlap."""
        extra = {n: v for n, v in measured.items() if n not in self.two_d}
        return SeedTable({**self.two_d, **extra}, self.measured | frozenset(extra))

    def with_value(self, n: int, two_d: int) -> SeedTable:
        return SeedTable({**self.two_d, n: two_d}, self.measured)


DEFAULT_SEEDS = SeedTable.default()


@dataclass(frozen=True)
class Prediction:
    n: int
    location: int
    source: str
    seed_n: int | None = None


@dataclass(frozen=True)
class SeedAnomaly:
    klass: int
    from_n: int
    to_n: int
    expected_two_d: int
    tabulated_two_d: int


@dataclass
class CrossValidationReport:
    checked: int = 0
    untested: int = 0
    mismatches: list[tuple[int, int, int, str]] = field(default_factory=list)
    seed_anomalies: list[SeedAnomaly] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def predict_even(n: int) -> int:
    if n % 2 or n < EVEN_START:
        raise DomainError(f"Even-n rule applies to even n >= {EVEN_START}, got {n}.")
    return half_index(n)


def _best_seed(n: int, seeds: SeedTable) -> tuple[int, int]:
    """Largest usable seed m' <= n of n's class, as (m', 2 D_m')."""
    klass = n % 4
    best: tuple[int, int] | None = None
    for m, two_d in seeds.for_class(klass):
        if m > n:
            continue
        k = (n - m) // PERIOD if m >= PERIODIC_FROM[klass] else 0
        candidate = (m + k * PERIOD, two_d + 2 * PERIOD_E_SUM * k)
        if best is None or candidate[0] > best[0]:
            best = candidate
    if best is None:
        raise DomainError(f"No class-{klass} seed at or below n={n}.")
    return best


def predict(n: int, seeds: SeedTable = DEFAULT_SEEDS) -> Prediction:
    """Predicted L(n) with the way it was obtained."""
    if n % 2 == 0:
        return Prediction(n, predict_even(n), "formula")
    seed_n, seed_two_d = _best_seed(n, seeds)
    if seed_n == n:
        return Prediction(n, (degree(n) - seed_two_d) // 2, "formula", seed_n)
    e = codec.expected_e(n % 4, seed_n + 4, n)
    return Prediction(n, location_from_e(n, seed_n, seed_two_d, e), "model", seed_n)


def predict_odd(n: int, seeds: SeedTable = DEFAULT_SEEDS) -> int:
    if n % 2 == 0:
        raise DomainError(f"predict_odd needs odd n, got {n}.")
    return predict(n, seeds).location


def seed_formula(n: int, seeds: SeedTable = DEFAULT_SEEDS) -> int | None:
    """
    L(n) = n(n+1)/4 - D_m - 19787 k when n = m + 62624 k for a periodic seed m.

    Returns None when n is not a shifted seed.
    """
    if n % 2 == 0:
        return None
    klass = n % 4
    for m, two_d in seeds.for_class(klass):
        if m > n or (n - m) % PERIOD or (m < PERIODIC_FROM[klass] and n != m):
            continue
        k = (n - m) // PERIOD
        return (degree(n) - two_d - 2 * PERIOD_E_SUM * k) // 2
    return None


def word_start_offsets(k: int, r: int, klass: int) -> int:
    """
    Offset of the r-th word of the k-th period from the class's first seed.

    Class 1 subtracts 76 only for r = 11, which 0..10 never reaches; class 3
    subtracts it for r >= 7, after its short word.
    """
    if klass not in PERIODIC_FROM:
        raise DomainError(f"Residue class must be 1 or 3, got {klass}.")
    if k < 0:
        raise DomainError(f"Period index must be non-negative, got {k}.")
    if not 0 <= r <= 10:
        raise DomainError(f"Word index must be in 0..10, got {r}.")
    offset = WORD_STRIDE * r + PERIOD * k
    if klass == 1:
        return offset - SHORT_WORD * (r == 11)
    return offset - SHORT_WORD * (r >= 7)


def word_start(k: int, r: int, klass: int) -> int:
    """n at which that word starts."""
    offset = word_start_offsets(k, r, klass)
    return PERIODIC_FROM[klass] + offset


def check_seeds(seeds: SeedTable = DEFAULT_SEEDS) -> list[SeedAnomaly]:
    """
    Compares every pair of neighbouring seeds with the E model between them.

    Seeds below the class's letter stream are not checked.
    """
    anomalies = []
    for klass in (1, 3):
        usable = [(m, v) for m, v in seeds.for_class(klass) if m >= codec.STREAM_START[klass]]
        for (m1, v1), (m2, v2) in zip(usable, usable[1:]):
            e = codec.expected_e(klass, m1 + 4, m2)
            expected = v1 + 2 * sum(value for _, value in e.items())
            if expected != v2:
                logging.warning(
                    f"Seed D_{m2}={Fraction(v2, 2)} disagrees with the model from "
                    f"D_{m1}, which gives {Fraction(expected, 2)}."
                )
                anomalies.append(SeedAnomaly(klass, m1, m2, expected, v2))
    return anomalies


def seeds_from_records(records: RecordLog, at: Iterable[int] | None = None) -> dict[int, int]:
    """Measured 2 D_n at the given odd n (default: both letter stream starts)."""
    wanted = list(codec.STREAM_START.values()) if at is None else list(at)
    measured = {}
    for n in wanted:
        record = records.get(n)
        if record is None or n % 2 == 0 or n < D_START:
            continue
        if record.occurrences != 2:
            logging.warning(f"Skipping seed n={n}: {record.occurrences} maxima.")
            continue
        measured[n] = doubled_d(record)
    return measured


def _check(record: MaxRecord, seeds: SeedTable, report: CrossValidationReport) -> None:
    try:
        prediction = predict(record.n, seeds)
    except DomainError:
        report.untested += 1
        return
    report.checked += 1
    if prediction.location != record.first_loc:
        report.mismatches.append(
            (record.n, prediction.location, record.first_loc, prediction.source)
        )


def cross_validate(records: RecordLog, seeds: SeedTable = DEFAULT_SEEDS) -> CrossValidationReport:
    """Predicts every recorded n that some predictor covers and lists disagreements."""
    report = CrossValidationReport(seed_anomalies=check_seeds(seeds))
    for record in records:
        if record.n % 2 == 0 and record.n < EVEN_START:
            report.untested += 1
            continue
        _check(record, seeds, report)
    logging.info(
        f"Cross-validated {report.checked} records: {len(report.mismatches)} mismatches, "
        f"{report.untested} untested."
    )
    return report
