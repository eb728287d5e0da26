"""
Growth of M_n and the integral of |(q;q)_n|^2 on the unit circle.

Ratios, roots and fits run in mpmath at a configurable number of decimal
digits. The integral of prod_j 4 sin^2(pi j z) over [0, 1] equals the sum of
the squared coefficients, so the quadrature is always checkable exactly.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from multiprocessing import get_context
from typing import Sequence

import numpy as np
from mpmath import mp

from qpochmax.common import DomainError, FitError, RecordLog

DEFAULT_PRECISION = 50
PRECISION_ENV = "QPOCH_PRECISION"
QUANTITIES = ("ratio", "root", "logM_over_n")
QUADRATURE_CHUNK = 8192


def resolve_precision(precision: int | None = None, fallback: int = DEFAULT_PRECISION) -> int:
    """Explicit precision, else $QPOCH_PRECISION, else `fallback` digits."""
    if precision is not None:
        return precision
    raw = os.environ.get(PRECISION_ENV)
    if raw:
        try:
            value = int(raw)
            if value > 0:
                return value
        except ValueError:
            pass
        logging.warning(f"Ignoring invalid {PRECISION_ENV}={raw!r}.")
    return fallback


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares coefficients of value(n) ~ a0 + a1/n + a2/n^2 + ..."""

    quantity: str
    coefficients: tuple
    n_start: int
    n_step: int
    n_count: int
    residual: object

    @property
    def a0(self):
        return self.coefficients[0]


@dataclass(frozen=True)
class GrowthEstimates:
    n_max: int
    k_log: object
    k_ratio: object
    ratio_at_nmax: object
    root_at_nmax: object
    ratio_fit: AsymptoticFit | None = None


def _max_abs(records: RecordLog, n: int) -> int:
    record = records.get(n)
    if record is None:
        raise DomainError(f"No record for n={n}.")
    return record.max_abs


def successive_ratio(records: RecordLog, n: int, precision: int | None = None):
    """M_n / M_{n-1}."""
    numerator, denominator = _max_abs(records, n), _max_abs(records, n - 1)
    with mp.workdps(resolve_precision(precision)):
        return mp.mpf(numerator) / mp.mpf(denominator)


def nth_root(records: RecordLog, n: int, precision: int | None = None):
    """M_n^(1/n), through log and exp of the exact integer."""
    if n < 1:
        raise DomainError(f"nth_root needs n >= 1, got {n}.")
    value = _max_abs(records, n)
    with mp.workdps(resolve_precision(precision)):
        return mp.exp(mp.log(mp.mpf(value)) / n)


def log_over_n(records: RecordLog, n: int, precision: int | None = None):
    if n < 1:
        raise DomainError(f"ln(M_n)/n needs n >= 1, got {n}.")
    value = _max_abs(records, n)
    with mp.workdps(resolve_precision(precision)):
        return mp.log(mp.mpf(value)) / n


_QUANTITY_FUNCS = {"ratio": successive_ratio, "root": nth_root, "logM_over_n": log_over_n}


def window_samples(
    records: RecordLog,
    quantity: str,
    start: int,
    step: int,
    end: int | None = None,
    precision: int | None = None,
) -> list[tuple[int, object]]:
    """(n, quantity(n)) for n = start, start + step, ... up to end or the last record."""
    if quantity not in _QUANTITY_FUNCS:
        raise DomainError(f"Unknown quantity {quantity!r}; choose from {QUANTITIES}.")
    if step < 1:
        raise DomainError(f"Window step must be positive, got {step}.")
    last = records.last_n if end is None else min(end, records.last_n or 0)
    func = _QUANTITY_FUNCS[quantity]
    return [(n, func(records, n, precision)) for n in range(start, (last or 0) + 1, step)]


def fit_series(
    samples: Sequence[tuple[int, object]],
    terms: int = 3,
    quantity: str = "ratio",
    precision: int | None = None,
) -> AsymptoticFit:
    """
    Least-squares fit in the basis 1, 1/n, ..., 1/n^(terms-1).

    Raises:
        DomainError: terms outside 2..4.
        FitError: fewer samples than terms, repeated n, or a singular system.
    """
    if not 2 <= terms <= 4:
        raise DomainError(f"Fits use 2 to 4 terms, got {terms}.")
    ns = [n for n, _ in samples]
    if len(set(ns)) != len(ns):
        raise FitError("Fit samples repeat an n value.")
    if len(samples) < terms:
        raise FitError(f"{len(samples)} samples cannot determine {terms} coefficients.")
    if any(n <= 0 for n in ns):
        raise FitError("Fit samples need positive n.")

    with mp.workdps(resolve_precision(precision)):
        A = mp.matrix(len(samples), terms)
        b = mp.matrix(len(samples), 1)
        for row, (n, value) in enumerate(samples):
            inv = mp.mpf(1) / n
            for col in range(terms):
                A[row, col] = inv**col
            b[row] = mp.mpf(value)
        try:
            x, residual = mp.qr_solve(A, b)
        except ZeroDivisionError as e:
            raise FitError(f"Singular fit system: {e}") from e
        coefficients = tuple(x[k] for k in range(terms))

    n_step = ns[1] - ns[0] if len(ns) > 1 else 0
    return AsymptoticFit(
        quantity=quantity,
        coefficients=coefficients,
        n_start=ns[0],
        n_step=n_step,
        n_count=len(ns),
        residual=residual,
    )


def growth_constant(
    records: RecordLog,
    window: tuple[int, int] | None = None,
    terms: int = 3,
    precision: int | None = None,
) -> GrowthEstimates:
    """
    K estimated as ln(M_N)/N and as ln of the fitted limit of M_n/M_{n-1}.

    `window` is (start, step) for the ratio fit; by default the upper half of
    the records in about twenty steps.
    """
    if not records or records.last_n is None or records.last_n < 2:
        raise DomainError("Growth estimates need records through at least n=2.")
    n_max = records.last_n
    if window is None:
        start = max((records.first_n or 0) + 1, n_max // 2, 2)
        window = (start, max(1, (n_max - start) // 20))
    digits = resolve_precision(precision)
    ratio_now = successive_ratio(records, n_max, digits)
    root_now = nth_root(records, n_max, digits)
    k_log = log_over_n(records, n_max, digits)

    ratio_fit = None
    samples = window_samples(records, "ratio", window[0], window[1], precision=digits)
    with mp.workdps(digits):
        if len(samples) >= terms:
            ratio_fit = fit_series(samples, terms, "ratio", digits)
            k_ratio = mp.log(ratio_fit.a0)
        else:
            logging.warning(
                f"Only {len(samples)} ratio samples in window {window}; using M_N/M_(N-1)."
            )
            k_ratio = mp.log(ratio_now)
    return GrowthEstimates(n_max, k_log, k_ratio, ratio_now, root_now, ratio_fit)


def windowed_log_growth(records: RecordLog, width: int, precision: int | None = None) -> list:
    """Mean of ln(M_n)/n over consecutive windows of `width` records."""
    if width < 1:
        raise DomainError(f"Window width must be positive, got {width}.")
    values = [log_over_n(records, r.n, precision) for r in records if r.n >= 1]
    with mp.workdps(resolve_precision(precision)):
        return [
            mp.fsum(values[k : k + width]) / len(values[k : k + width])
            for k in range(0, len(values) - width + 1, width)
        ]


def _pairwise_sum(values: Sequence[float]) -> float:
    if len(values) <= 2:
        return float(sum(values))
    mid = len(values) // 2
    return _pairwise_sum(values[:mid]) + _pairwise_sum(values[mid:])


def _panel_chunk(n: int, panels: int, lo: int, hi: int) -> float:
    z = (np.arange(lo, hi, dtype=np.float64) + 0.5) / panels
    j = np.arange(1, n + 1, dtype=np.float64)
    integrand = np.prod((2.0 * np.sin(np.pi * np.outer(z, j))) ** 2, axis=1)
    return float(np.sum(integrand))


def kotesovec_integral(
    n: int,
    subdivisions: int | None = None,
    max_n: int = 64,
    panel_factor: int = 64,
    workers: int = 1,
):
    """
    Composite midpoint estimate of the integral over [0, 1] of prod_{j<=n} 4 sin^2(pi j z).

    Chunk sums are combined in a fixed pairwise order, so the result does not
    depend on `workers`.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}.")
    if n > max_n:
        raise DomainError(f"Quadrature is limited to n <= {max_n}, got {n}.")
    minimum = panel_factor * n * n
    panels = minimum if subdivisions is None else subdivisions
    if panels < minimum:
        raise DomainError(f"n={n} needs at least {minimum} panels, got {panels}.")
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}.")

    bounds = [(lo, min(lo + QUADRATURE_CHUNK, panels)) for lo in range(0, panels, QUADRATURE_CHUNK)]
    if workers == 1:
        sums = [_panel_chunk(n, panels, lo, hi) for lo, hi in bounds]
    else:
        los, his = zip(*bounds)
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context()) as pool:
            sums = list(pool.map(_panel_chunk, repeat(n), repeat(panels), los, his))
    total = _pairwise_sum(sums)
    logging.info(f"Quadrature for n={n} over {panels} panels in {len(bounds)} chunks.")
    return mp.mpf(total) / panels
