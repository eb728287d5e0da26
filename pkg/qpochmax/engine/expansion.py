"""
Incremental expansion of (q;q)_n = (1-q)(1-q^2)...(1-q^n) in half storage.

Only a_{n,0..floor(n(n+1)/4)} is kept; the rest follows from
a_{n,i} = (-1)^n a_{n, n(n+1)/2 - i}. Moving from n-1 to n uses
a_{n,i} = a_{n-1,i} - a_{n-1,i-n}.
"""

from __future__ import annotations

import logging
from math import isqrt
from multiprocessing import get_context
from typing import Callable, Iterator

import numpy as np

from qpochmax.common import (
    DomainError,
    FullPoly,
    HalfPoly,
    MaxRecord,
    degree,
    half_index,
)
from qpochmax.engine.scanner import MaxAccumulator

DEFAULT_NAIVE_CAP = 2000


def init_identity() -> HalfPoly:
    """The empty product (q;q)_0 = 1."""
    return HalfPoly(0, [1])


def pentagonal_coefficient(i: int) -> int:
    """
    Coefficient of q^i in the infinite product (q;q)_inf.

    It is (-1)^k when i = k(3k-1)/2 for some integer k, otherwise 0.
    """
    if i < 0:
        return 0
    disc = 24 * i + 1
    r = isqrt(disc)
    if r * r != disc:
        return 0
    if r % 6 == 5:
        k = (r + 1) // 6
    elif r % 6 == 1:
        k = (1 - r) // 6
    else:
        return 0
    return -1 if k % 2 else 1


def _implied_block(coeffs: np.ndarray, m: int, lo: int, hi: int, base: int = 0) -> np.ndarray:
    """
    a_{m,i} for lo <= i <= hi, zero outside [0, deg].

    `coeffs[j]` holds the stored coefficient a_{m, base + j}; it must cover
    every stored index the range touches directly or through the mirror.
    """
    out = np.zeros(hi - lo + 1, dtype=object)
    if hi < lo:
        return out
    h, top = half_index(m), degree(m)
    s_lo, s_hi = max(lo, 0), min(hi, h)
    if s_lo <= s_hi:
        out[s_lo - lo : s_hi - lo + 1] = coeffs[s_lo - base : s_hi - base + 1]
    m_lo, m_hi = max(lo, h + 1), min(hi, top)
    if m_lo <= m_hi:
        mirrored = coeffs[top - m_hi - base : top - m_lo - base + 1][::-1]
        out[m_lo - lo : m_hi - lo + 1] = -mirrored if m % 2 else mirrored
    return out


def _sweep_down(c: np.ndarray, n: int, top: int, acc: MaxAccumulator | None = None) -> None:
    """
    In place a_{n,i} = a_{n-1,i} - a_{n-1,i-n} for n <= i <= top.

    Blocks of at most n entries are taken from the top down, so each block
    only reads entries below itself that are still at their n-1 values.
    """
    hi = top
    while hi >= n:
        lo = max(n, hi - n + 1)
        c[lo : hi + 1] = c[lo : hi + 1] - c[lo - n : hi - n + 1]
        if acc is not None:
            acc.update(c[lo : hi + 1], lo)
        hi = lo - 1


def _advance(p: HalfPoly, acc: MaxAccumulator | None) -> HalfPoly:
    m, n = p.n, p.n + 1
    old_top, new_top = half_index(m), half_index(n)
    c = np.empty(new_top + 1, dtype=object)
    c[: old_top + 1] = p.coeffs
    # Fresh tail first; it reads a_{n-1,*} through the symmetry relation.
    c[old_top + 1 :] = _implied_block(p.coeffs, m, old_top + 1, new_top) - _implied_block(
        p.coeffs, m, old_top + 1 - n, new_top - n
    )
    if acc is not None:
        acc.update(c[old_top + 1 :], old_top + 1)
    _sweep_down(c, n, old_top, acc)
    if acc is not None:
        acc.update(c[: min(n, old_top + 1)], 0)
    return HalfPoly(n, c)


def step(p: HalfPoly) -> HalfPoly:
    """Returns the half array of (q;q)_{n} given that of (q;q)_{n-1}."""
    return _advance(p, None)


def step_and_scan(p: HalfPoly) -> tuple[HalfPoly, MaxRecord]:
    """step() with the maximum search folded into the sweep."""
    acc = MaxAccumulator()
    nxt = _advance(p, acc)
    return nxt, acc.to_record(nxt.n, nxt.coeffs[-1])


def _slice_bounds(size: int, workers: int) -> list[tuple[int, int]]:
    """Contiguous, possibly empty slices [lo, hi] covering 0..size-1."""
    cuts = [size * k // workers for k in range(workers + 1)]
    return [(cuts[k], cuts[k + 1] - 1) for k in range(workers)]


def _overlap(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int] | None:
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


def _source_needs(m: int, new_slice: tuple[int, int]) -> list[tuple[int, int]]:
    """
    Stored indices of (q;q)_m that a worker reads to build `new_slice` of (q;q)_{m+1}.

    The halo covers a_{m,i-n} and a_{m,i}; indices past the stored half are
    reached through their mirror near the top of the half.
    """
    lo, hi = new_slice
    if hi < lo:
        return []
    n, h, top = m + 1, half_index(m), degree(m)
    needs = []
    direct = (max(0, lo - n), min(hi, h))
    if direct[0] <= direct[1]:
        needs.append(direct)
    if hi > h:
        mirror = (max(0, top - hi), top - max(lo, h + 1))
        if mirror[0] <= mirror[1]:
            needs.append(mirror)
    return needs


class _Slice:
    """Worker-side state: the coefficients a_{n,lo..hi} of the slice it owns."""

    def __init__(self):
        self.n = 0
        self.bounds = (0, -1)
        self.coeffs = np.zeros(0, dtype=object)

    def load(self, n: int, bounds: tuple[int, int], coeffs: np.ndarray) -> None:
        self.n, self.bounds, self.coeffs = n, bounds, coeffs

    def export(self, ranges: list[tuple[int, int]]) -> list[np.ndarray]:
        lo = self.bounds[0]
        return [self.coeffs[a - lo : b - lo + 1].copy() for a, b in ranges]

    def advance(
        self, bounds: tuple[int, int], imports: list[tuple[int, np.ndarray]]
    ) -> tuple[MaxAccumulator, object]:
        m, n = self.n, self.n + 1
        lo, hi = bounds
        acc = MaxAccumulator()
        if hi < lo:
            self.load(n, bounds, np.zeros(0, dtype=object))
            return acc, None
        pieces = [(self.bounds[0], self.coeffs)] + imports
        needs = _source_needs(m, bounds)
        base = min(a for a, _ in needs)
        window = np.zeros(max(b for _, b in needs) - base + 1, dtype=object)
        for start, values in pieces:
            for a, b in needs:
                part = _overlap((a, b), (start, start + len(values) - 1))
                if part is not None:
                    window[part[0] - base : part[1] - base + 1] = values[part[0] - start : part[1] - start + 1]
        block = _implied_block(window, m, lo, hi, base) - _implied_block(window, m, lo - n, hi - n, base)
        acc.update(block, lo)
        self.load(n, bounds, block)
        return acc, block[-1]


def _slice_worker(conn) -> None:
    """Process loop: runs one _Slice method per message until it receives None."""
    state = _Slice()
    while True:
        message = conn.recv()
        if message is None:
            break
        method, args = message
        try:
            conn.send(("ok", getattr(state, method)(*args)))
        except Exception as e:
            conn.send(("error", e))
    conn.close()


class ParallelStepper:
    """
    Steps a HalfPoly forward on persistent worker processes.

    Every worker owns one contiguous slice of the half array. A step reads
    only (q;q)_{n-1}: each worker first hands out the halo entries its
    neighbours need, then all workers write their new slices, which never
    overlap. Slice bounds are recomputed each step as the half array grows.
    """

    def __init__(self, p: HalfPoly, workers: int):
        if workers < 1:
            raise DomainError(f"workers must be at least 1, got {workers}.")
        self.workers = workers
        self.n = p.n
        self._bounds = _slice_bounds(len(p.coeffs), workers)
        ctx = get_context()
        self._conns = []
        self._procs = []
        for _ in range(workers):
            parent_end, child_end = ctx.Pipe()
            proc = ctx.Process(target=_slice_worker, args=(child_end,), daemon=True)
            proc.start()
            child_end.close()
            self._conns.append(parent_end)
            self._procs.append(proc)
        logging.debug(f"Started {workers} slice workers at n={p.n}.")
        coeffs = np.asarray(p.coeffs, dtype=object)
        self._broadcast(
            "load", [(p.n, (lo, hi), coeffs[lo : hi + 1].copy()) for lo, hi in self._bounds]
        )

    def __enter__(self) -> ParallelStepper:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        for conn in self._conns:
            try:
                conn.send(None)
            except (BrokenPipeError, OSError):
                pass
            conn.close()
        for proc in self._procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
        self._conns, self._procs = [], []

    def _broadcast(self, method: str, args_per_worker: list[tuple]) -> list:
        for conn, args in zip(self._conns, args_per_worker):
            conn.send((method, args))
        replies = [conn.recv() for conn in self._conns]
        for status, value in replies:
            if status == "error":
                raise value
        return [value for _, value in replies]

    def step(self) -> MaxRecord:
        """Advances one index and returns the MaxRecord of the new polynomial."""
        m, n = self.n, self.n + 1
        new_bounds = _slice_bounds(half_index(n) + 1, self.workers)
        # (owner, receiver, range) for every needed entry a worker does not hold itself.
        transfers = []
        for k, target in enumerate(new_bounds):
            for need in _source_needs(m, target):
                for j, owned in enumerate(self._bounds):
                    part = _overlap(need, owned)
                    if part is not None and j != k:
                        transfers.append((j, k, part))
        requests = [[part for j, _, part in transfers if j == owner] for owner in range(self.workers)]
        exported = self._broadcast("export", [(r,) for r in requests])
        imports: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(self.workers)]
        cursor = [0] * self.workers
        for j, k, part in transfers:
            imports[k].append((part[0], exported[j][cursor[j]]))
            cursor[j] += 1
        results = self._broadcast("advance", [(b, imp) for b, imp in zip(new_bounds, imports)])
        acc = MaxAccumulator()
        middle = None
        for (lo, hi), (partial, last) in zip(new_bounds, results):
            acc.merge(partial)
            if lo <= hi:
                middle = last
        self._bounds = new_bounds
        self.n = n
        return acc.to_record(n, middle)

    def current(self) -> HalfPoly:
        """Gathers the slices into a fresh HalfPoly."""
        parts = self._broadcast("export", [([b],) if b[0] <= b[1] else ([],) for b in self._bounds])
        return HalfPoly(self.n, np.concatenate([p[0] for p in parts if p]))


def step_parallel(p: HalfPoly, workers: int) -> HalfPoly:
    """One step on `workers` processes; bit-identical to step(p)."""
    with ParallelStepper(p, workers) as stepper:
        stepper.step()
        return stepper.current()


def iterate(
    p: HalfPoly,
    target: int,
    workers: int = 1,
    keep: Callable[[int], bool] | None = None,
) -> Iterator[tuple[HalfPoly | None, MaxRecord]]:
    """
    Yields (poly, record) for every index from p.n + 1 through target.

    `keep(n)` selects the indices whose polynomial is handed out; for the
    others poly is None. With workers > 1 every kept poly is gathered from
    the worker processes, so keep it sparse on long runs.
    """
    if target < p.n:
        raise DomainError(f"Cannot iterate backwards from n={p.n} to n={target}.")
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}.")
    wanted = keep if keep is not None else (lambda n: True)
    if workers == 1:
        cur = p
        while cur.n < target:
            cur, record = step_and_scan(cur)
            yield (cur if wanted(cur.n) else None), record
        return
    with ParallelStepper(p, workers) as stepper:
        while stepper.n < target:
            record = stepper.step()
            yield (stepper.current() if wanted(stepper.n) else None), record


def expand_to(n: int, workers: int = 1) -> HalfPoly:
    """Half array of (q;q)_n built from the identity."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}.")
    cur = init_identity()
    for poly, _ in iterate(cur, n, workers, keep=lambda k: k == n):
        cur = poly
    return cur


def coefficient(p: HalfPoly, i: int) -> int:
    """a_{n,i} for 0 <= i <= n(n+1)/2."""
    top = degree(p.n)
    if not 0 <= i <= top:
        raise DomainError(f"Index {i} outside [0, {top}] for n={p.n}.")
    if i < len(p.coeffs):
        return int(p.coeffs[i])
    mirrored = int(p.coeffs[top - i])
    return -mirrored if p.n % 2 else mirrored


def expand_full(p: HalfPoly) -> FullPoly:
    """Every coefficient of (q;q)_n, upper half filled in by symmetry."""
    full = _implied_block(p.coeffs, p.n, 0, degree(p.n))
    return FullPoly(p.n, tuple(int(c) for c in full))


def naive_expand(n: int, cap: int = DEFAULT_NAIVE_CAP) -> FullPoly:
    """Schoolbook product of the factors (1 - q^k), k = 1..n, without any symmetry."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}.")
    if n > cap:
        raise DomainError(f"naive_expand is capped at n={cap}, got {n}.")
    poly = np.ones(1, dtype=object)
    for k in range(1, n + 1):
        nxt = np.zeros(len(poly) + k, dtype=object)
        nxt[: len(poly)] += poly
        nxt[k:] -= poly
        poly = nxt
    return FullPoly(n, tuple(int(c) for c in poly))


def sum_of_squares(p: HalfPoly) -> int:
    """Sum of a_{n,i}^2 over the whole polynomial."""
    total = 2 * sum(int(c) * int(c) for c in p.coeffs)
    if degree(p.n) % 2 == 0:
        middle = int(p.coeffs[-1])
        total -= middle * middle
    return total