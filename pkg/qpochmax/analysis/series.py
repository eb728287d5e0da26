"""
Location offsets of the maximum for odd n, and checks of their structure.

For odd n >= 35 the maximum sits at L(n) and at its mirror, and
D_n = n(n+1)/4 - L(n). D_n is a half-integer when n = 1 (mod 4), so every
value here is kept doubled: two_D = n(n+1)/2 - 2 L(n).
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

import pandas as pd

from qpochmax.common import DomainError, MalformedRowError, MaxRecord, RecordLog, degree, half_index

D_START = 35
E_START = 39
E_POSITIVE_START = 61
EVEN_RULE_START = 34

ANALYSIS_COLUMNS = ["n", "two_D", "E", "E_tilde", "flags"]


@dataclass(frozen=True)
class DSeries:
    """Doubled D values keyed by odd n."""

    two_d: dict[int, int]

    def __contains__(self, n: int) -> bool:
        return n in self.two_d

    def value(self, n: int) -> Fraction:
        return Fraction(self.two_d[n], 2)


@dataclass(frozen=True)
class ESeries:
    values: dict[int, int]

    def __contains__(self, n: int) -> bool:
        return n in self.values

    def __getitem__(self, n: int) -> int:
        return self.values[n]

    def __len__(self) -> int:
        return len(self.values)

    def items(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.values.items()))


@dataclass(frozen=True)
class Violation:
    n: int
    rule: str
    detail: str


@dataclass
class ValidationReport:
    first_n: int | None = None
    last_n: int | None = None
    violations: list[Violation] = field(default_factory=list)
    notes: list[Violation] = field(default_factory=list)
    checked: dict[str, int] = field(default_factory=lambda: defaultdict(int))

    @property
    def ok(self) -> bool:
        return not self.violations

    def flags_by_n(self) -> dict[int, list[str]]:
        flags: dict[int, list[str]] = defaultdict(list)
        for v in self.violations + self.notes:
            flags[v.n].append(v.rule)
        return flags


def doubled_d(r: MaxRecord) -> int:
    """2 D_n = n(n+1)/2 - 2 L(n) for any record."""
    return degree(r.n) - 2 * r.first_loc


def d_value(r: MaxRecord) -> Fraction:
    if r.n % 2 == 0:
        raise DomainError(f"D is defined for odd n only, got n={r.n}.")
    if r.n < D_START:
        raise DomainError(f"D is defined for n >= {D_START}, got n={r.n}.")
    if r.occurrences != 2:
        logging.warning(
            f"n={r.n} has {r.occurrences} maximal coefficients; D taken from the first."
        )
    return Fraction(doubled_d(r), 2)


def d_series(records: Iterable[MaxRecord]) -> DSeries:
    return DSeries({r.n: doubled_d(r) for r in records if r.n % 2 and r.n >= D_START})


def e_series(d: DSeries) -> ESeries:
    """E_n = D_n - D_{n-4}; n without a predecessor is left out."""
    values = {}
    for n, two_d in d.two_d.items():
        if n - 4 in d.two_d:
            values[n] = (two_d - d.two_d[n - 4]) // 2
    return ESeries(values)


def e_tilde_series(d: DSeries) -> ESeries:
    """E~_n = 2 (D_n - D_{n-2})."""
    return ESeries({n: v - d.two_d[n - 2] for n, v in d.two_d.items() if n - 2 in d.two_d})


def location_from_e(n: int, seed_n: int, seed_two_d: int, e: ESeries) -> int:
    """
    L(n) recovered from a seed D_m and the E values E_{m+4}, ..., E_n.

    Raises DomainError if n is not reachable from the seed in steps of 4 or an
    E value is missing.
    """
    if n < seed_n or (n - seed_n) % 4:
        raise DomainError(f"n={n} is not reachable from seed {seed_n} in steps of 4.")
    total = seed_two_d
    for k in range(seed_n + 4, n + 1, 4):
        if k not in e:
            raise DomainError(f"E_{k} is needed to reach n={n} and is missing.")
        total += 2 * e[k]
    twice_location = degree(n) - total
    if twice_location % 2:
        raise DomainError(f"Seed and E values give a fractional location for n={n}.")
    return twice_location // 2


def validate(records: RecordLog) -> ValidationReport:
    """
    Lists every record that breaks the structural rules of the maxima.

    Even n >= 34 must peak at floor(n(n+1)/4). Odd n >= 35 must have exactly
    two maxima, the first in the lower half, positive when n = 1 (mod 4) and
    negative when n = 3 (mod 4). E_n must lie in {0, 1, 2} from n = 39, be
    positive from n = 61, and E~_n must be 1 or 3 from n = 61.
    """
    report = ValidationReport(first_n=records.first_n, last_n=records.last_n)
    add = report.violations.append

    for r in records:
        if r.n % 2 == 0:
            if r.n < EVEN_RULE_START:
                continue
            report.checked["even-location"] += 1
            if r.first_loc != half_index(r.n):
                add(Violation(r.n, "even-location", f"L={r.first_loc}, expected {half_index(r.n)}"))
            continue
        if r.n < D_START:
            if r.occurrences != 2:
                report.notes.append(
                    Violation(r.n, "multiplicity", f"{r.occurrences} maxima below n={D_START}")
                )
            continue
        report.checked["odd-structure"] += 1
        if r.occurrences != 2:
            add(Violation(r.n, "multiplicity", f"{r.occurrences} maxima"))
        if 4 * r.first_loc >= r.n * (r.n + 1):
            add(Violation(r.n, "side", f"L={r.first_loc} is not below n(n+1)/4"))
        expected_sign = 1 if r.n % 4 == 1 else -1
        if r.sign_at_first != expected_sign:
            add(Violation(r.n, "sign", f"sign {r.sign_at_first:+d}, expected {expected_sign:+d}"))

    d = d_series(records)
    for n, value in e_series(d).items():
        if n < E_START:
            continue
        report.checked["E-range"] += 1
        if value not in (0, 1, 2):
            add(Violation(n, "E-range", f"E={value}"))
        if n >= E_POSITIVE_START:
            report.checked["E-positive"] += 1
            if value <= 0:
                add(Violation(n, "E-positive", f"E={value}"))
    for n, value in e_tilde_series(d).items():
        if n < E_POSITIVE_START:
            continue
        report.checked["E-tilde"] += 1
        if value not in (1, 3):
            add(Violation(n, "E-tilde", f"E~={value}"))

    logging.info(
        f"Validated n={report.first_n}..{report.last_n}: "
        f"{len(report.violations)} violations, {len(report.notes)} notes."
    )
    return report


def analysis_frame(records: RecordLog, report: ValidationReport | None = None) -> pd.DataFrame:
    d = d_series(records)
    e, et = e_series(d), e_tilde_series(d)
    flags = report.flags_by_n() if report is not None else {}
    rows = [
        [
            str(n),
            str(two_d),
            str(e[n]) if n in e else "",
            str(et[n]) if n in et else "",
            ";".join(flags.get(n, [])),
        ]
        for n, two_d in sorted(d.two_d.items())
    ]
    return pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)


def write_analysis(path: Path | str, records: RecordLog, report: ValidationReport | None = None) -> None:
    analysis_frame(records, report).to_csv(path, index=False, lineterminator="\n")


def read_analysis(path: Path | str) -> tuple[DSeries, ESeries]:
    """Reads the D and E columns back from an analysis CSV."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = set(ANALYSIS_COLUMNS[:3]) - set(df.columns)
    if missing:
        raise MalformedRowError(f"'{path}' lacks columns {sorted(missing)}.")
    two_d, e = {}, {}
    for line, row in enumerate(df.to_dict("records"), start=2):
        try:
            n = int(row["n"])
            two_d[n] = int(row["two_D"])
            if row["E"] != "":
                e[n] = int(row["E"])
        except ValueError as err:
            raise MalformedRowError(f"Line {line}: {err}") from err
    return DSeries(two_d), ESeries(e)
