import unittest

import numpy as np

from qpochmax.common import MaxRecord, half_index
from qpochmax.engine.expansion import expand_to, init_identity, iterate, naive_expand
from qpochmax.engine.scanner import MaxAccumulator, all_max_locations, scan


def brute_force_record(n: int) -> MaxRecord:
    coeffs = naive_expand(n).coeffs
    best = max(abs(c) for c in coeffs)
    hits = [i for i, c in enumerate(coeffs) if abs(c) == best]
    return MaxRecord(n, best, hits[0], len(hits), 1 if coeffs[hits[0]] > 0 else -1)


class TestScan(unittest.TestCase):
    """Maximum search over the stored half."""

    @classmethod
    def setUpClass(cls):
        cls.polys = {p.n: p for p, _ in iterate(init_identity(), 220)}
        cls.records = {p.n: r for p, r in iterate(init_identity(), 220)}

    def test_identity(self):
        self.assertEqual(scan(init_identity()), MaxRecord(0, 1, 0, 1, 1))

    def test_matches_brute_force(self):
        for n in range(1, 61):
            with self.subTest(n=n):
                self.assertEqual(scan(self.polys[n]), brute_force_record(n))

    def test_n4_middle_counted_once(self):
        self.assertEqual(scan(expand_to(4)), MaxRecord(4, 2, 5, 1, 1))

    def test_n33_has_four_maxima(self):
        p = self.polys[33]
        self.assertEqual(all_max_locations(p), [270, 272, 289, 291])
        record = scan(p)
        self.assertEqual(record.first_loc, 270)
        self.assertEqual(record.occurrences, 4)

    def test_fused_scan_equals_scan(self):
        for n, p in self.polys.items():
            with self.subTest(n=n):
                self.assertEqual(self.records[n], scan(p))

    def test_even_n_peaks_at_centre(self):
        for n in range(34, 221, 2):
            with self.subTest(n=n):
                self.assertEqual(self.records[n].first_loc, half_index(n))

    def test_odd_n_have_two_maxima_of_opposite_sign(self):
        for n in range(35, 221, 2):
            record = self.records[n]
            with self.subTest(n=n):
                self.assertEqual(record.occurrences, 2)
                self.assertLess(4 * record.first_loc, n * (n + 1))
                self.assertEqual(record.sign_at_first, 1 if n % 4 == 1 else -1)


class TestMaxAccumulator(unittest.TestCase):
    """Block order and merging must not change the result."""

    def setUp(self):
        self.values = np.array([3, -7, 2, 7, -7, 1, 0, 5], dtype=object)

    def test_single_pass(self):
        acc = MaxAccumulator()
        acc.update(self.values, 0)
        self.assertEqual((acc.best, acc.first_index, acc.first_value, acc.hits), (7, 1, -7, 3))

    def test_blocks_in_reverse_order(self):
        acc = MaxAccumulator()
        for lo in (6, 3, 0):
            acc.update(self.values[lo : lo + 3], lo)
        self.assertEqual((acc.best, acc.first_index, acc.first_value, acc.hits), (7, 1, -7, 3))

    def test_merge_partials(self):
        left, right, empty = MaxAccumulator(), MaxAccumulator(), MaxAccumulator()
        right.update(self.values[4:], 4)
        left.update(self.values[:4], 0)
        right.merge(empty)
        right.merge(left)
        self.assertEqual((right.best, right.first_index, right.hits), (7, 1, 3))

    def test_empty_block_is_ignored(self):
        acc = MaxAccumulator()
        acc.update(self.values[:0], 0)
        self.assertEqual(acc.best, -1)


if __name__ == "__main__":
    unittest.main()
