"""Maximum absolute coefficient search over a half-stored (q;q)_n."""

from __future__ import annotations

import numpy as np

from qpochmax.common import HalfPoly, MaxRecord, degree, half_index


class MaxAccumulator:
    """
    Running maximum of |a_{n,i}| over the lower half of a polynomial.

    Blocks may be fed in any order; ties keep the smallest index, so merging
    partial accumulators gives the same result as one ascending pass.
    """

    def __init__(self):
        self.best = -1
        self.first_index = -1
        self.first_value = 0
        self.hits = 0

    def update(self, block: np.ndarray, offset: int) -> None:
        """Folds coefficients block[j] = a_{n, offset + j} into the running maximum."""
        if len(block) == 0:
            return
        mags = np.abs(block)
        block_best = mags.max()
        if block_best < self.best:
            return
        where = np.flatnonzero(mags == block_best)
        index = offset + int(where[0])
        if block_best > self.best:
            self.best = block_best
            self.first_index = index
            self.first_value = block[where[0]]
            self.hits = len(where)
            return
        self.hits += len(where)
        if index < self.first_index:
            self.first_index = index
            self.first_value = block[where[0]]

    def merge(self, other: MaxAccumulator) -> None:
        if other.best < 0:
            return
        if other.best > self.best:
            self.best = other.best
            self.first_index = other.first_index
            self.first_value = other.first_value
            self.hits = other.hits
        elif other.best == self.best:
            self.hits += other.hits
            if other.first_index < self.first_index:
                self.first_index = other.first_index
                self.first_value = other.first_value

    def to_record(self, n: int, middle_value: int) -> MaxRecord:
        """
        Builds the MaxRecord for (q;q)_n.

        Args:
            n: Index of the product the fed blocks belong to.
            middle_value: The last stored coefficient a_{n, floor(n(n+1)/4)}.
        """
        occurrences = 2 * self.hits
        # Index n(n+1)/4 mirrors onto itself when the degree is even.
        if degree(n) % 2 == 0 and abs(middle_value) == self.best:
            occurrences -= 1
        return MaxRecord(
            n=n,
            max_abs=int(self.best),
            first_loc=self.first_index,
            occurrences=occurrences,
            sign_at_first=1 if self.first_value > 0 else -1,
        )


def scan(p: HalfPoly) -> MaxRecord:
    acc = MaxAccumulator()
    acc.update(p.coeffs, 0)
    return acc.to_record(p.n, p.coeffs[-1])


def all_max_locations(p: HalfPoly) -> list[int]:
    """Every index of the full polynomial whose coefficient has absolute value M_n."""
    mags = np.abs(p.coeffs)
    lower = [int(i) for i in np.flatnonzero(mags == mags.max())]
    top, h = degree(p.n), half_index(p.n)
    upper = [top - i for i in lower if top - i > h]
    return sorted(lower + upper)
