import unittest
from fractions import Fraction

import numpy as np

from bsglab import (
    ApCover,
    EncodingOverflow,
    IntSet,
    InvalidParameter,
    LatticeSet,
    PairConstraint,
    ReferenceMismatch,
    count_three_term_progressions,
    decode_values,
    dilate,
    doubling_report,
    embed_values,
    freiman_embed,
    midpoint_pairs,
    minimal_ap_cover,
    representation_counts,
    restricted_sumset,
    sumset,
)
from bsglab.pipeline import brute_restricted_sumset, random_set
from bsglab.sets import from_json, to_json

from . import base, oracles
from .instances.blocks import near_extremal
from .instances.randomized import random_instance, random_lattice


class IntSetTest(base.LabTestCase):

    def test_runs(self):
        a = IntSet.of([5, 1, 2, 3, 9, 2])
        self.assertEqual(list(a), [1, 2, 3, 5, 9])
        self.assertEqual(a.run_count, 3)
        self.assertEqual(a.min, 1)
        self.assertEqual(a.max, 9)
        self.assertIn(5, a)
        self.assertNotIn(4, a)
        self.assertEqual(a.index_of([5]).tolist(), [3])
        self.assertEqual(a.element_at([0, 4]).tolist(), [1, 9])

    def test_set_algebra(self):
        a = IntSet.interval(1, 10)
        b = IntSet.of([0, 5, 11, 12])
        self.assertEqual(a | b, IntSet.interval(0, 12))
        self.assertEqual(a & b, IntSet.of([5]))
        self.assertEqual(list(a - b), [1, 2, 3, 4, 6, 7, 8, 9, 10])
        self.assertTrue(IntSet.of([2, 3]).issubset(a))
        self.assertEqual(a.window(8, 20), IntSet.interval(8, 10))
        self.assertEqual(a.negated(), IntSet.interval(-10, -1))

    def test_empty(self):
        empty = IntSet.empty()
        self.assertEqual(len(empty), 0)
        self.assertEqual(sumset(empty, IntSet.interval(1, 3)), empty)
        with self.assertRaises(InvalidParameter):
            empty.min

    def test_index_of_outside(self):
        with self.assertRaises(ReferenceMismatch):
            IntSet.interval(1, 3).index_of([4])

    def test_overflow(self):
        with self.assertRaises(EncodingOverflow):
            IntSet.of([2**62])
        with self.assertRaises(EncodingOverflow):
            IntSet.of([2**61]).shifted(2**61)


class SumsetTest(base.LabTestCase):

    def test_intervals(self):
        a = IntSet.interval(1, 10)
        self.assertEqual(len(sumset(a, a)), 19)
        self.assertEqual(sumset(IntSet.of([0]), IntSet.of([0])), IntSet.of([0]))

    def test_against_pairs(self):
        for _ in range(25):
            a = random_set(self.rng, int(self.rng.integers(1, 40)), 80)
            b = random_set(self.rng, int(self.rng.integers(1, 40)), 80)
            self.assertEqual(sumset(a, b, self.budget), oracles.sumset(a, b))

    def test_runs_and_points(self):
        a = IntSet.interval(0, 99).union(IntSet.of([150, 170, 400]))
        b = IntSet.of([-3, 7]).union(IntSet.interval(1000, 1100))
        self.assertEqual(sumset(a, b, self.budget), oracles.sumset(a, b))

    def test_sparse_windows(self):
        # spans beyond max_span are scattered one window at a time
        a = random_set(self.rng, 50, 1_000_000)
        b = random_set(self.rng, 60, 1_000_000)
        self.assertEqual(sumset(a, b, {"max_span": 1000}), oracles.sumset(a, b))

    def test_representation_counts(self):
        a = IntSet.of([1, 2, 3, 10]).union(IntSet.interval(40, 90))
        b = IntSet.of([0, 4]).union(IntSet.interval(20, 60))
        targets = [-1, 1, 5, 7, 14, 50, 61, 100, 150, 200]
        got = representation_counts(a, b, targets, self.budget)
        self.assertEqual(got.tolist(), oracles.representation_counts(a, b, targets))

    def test_lattice(self):
        a = random_lattice(self.rng, 2, 3, 12)
        b = random_lattice(self.rng, 2, 3, 9)
        self.assertEqual(set(sumset(a, b, self.budget)), oracles.lattice_sums(a, b))

    def test_commutative(self):
        for _ in range(10):
            a = random_set(self.rng, int(self.rng.integers(1, 30)), 50)
            b = random_set(self.rng, int(self.rng.integers(1, 30)), 50)
            self.assertEqual(sumset(a, b, self.budget), sumset(b, a, self.budget))

    def test_size_lower_bound(self):
        for _ in range(200):
            a = random_set(self.rng, int(self.rng.integers(1, 6)), 4)
            b = random_set(self.rng, int(self.rng.integers(1, 6)), 4)
            size = len(sumset(a, b, self.budget))
            self.assertGreaterEqual(size, len(a) + len(b) - 1)
            if size == len(a) + len(b) - 1 and min(len(a), len(b)) > 1:
                self.assertIsNotNone(oracles.common_difference(a))
                self.assertEqual(oracles.common_difference(a), oracles.common_difference(b))
        self.assertEqual(len(sumset(IntSet.of([3, 8, 13, 18]), IntSet.of([-7, -2, 3]))), 6)
        self.assertGreater(len(sumset(IntSet.of([0, 5, 10]), IntSet.of([0, 3, 6]))), 5)

    def test_mixed_operands(self):
        with self.assertRaises(ReferenceMismatch):
            sumset(IntSet.of([1]), LatticeSet(2, 1, [[0, 0]]))


class RestrictedSumsetTest(base.LabTestCase):

    def test_against_pairs(self):
        for _ in range(40):
            a, b, gamma = random_instance(self.rng)
            self.assertEqual(restricted_sumset(a, b, gamma, self.budget), brute_restricted_sumset(a, b, gamma))

    def test_near_extremal(self):
        a, gamma = near_extremal()
        self.assertEqual(len(a), 1001)
        self.assertEqual(len(restricted_sumset(a, a, gamma, self.budget)), 2099)
        report = doubling_report(a, gamma, self.budget)
        self.assertEqual(report.K, Fraction(2099, 1001))
        self.assertEqual(report.sumset_size, 2300)
        self.assertEqual(report.removed_pairs, 101 * 101)

    def test_monotone_in_gamma(self):
        for _ in range(20):
            a, b, gamma = random_instance(self.rng)
            keep = self.rng.random(gamma.removed_count) < 0.5
            larger = PairConstraint(a, b, gamma.removed[keep])
            self.assertTrue(restricted_sumset(a, b, gamma).issubset(restricted_sumset(a, b, larger)))

    def test_nothing_kept(self):
        a = IntSet.of([1, 4, 6])
        gamma = PairConstraint.nothing_kept(a, a)
        self.assertEqual(len(restricted_sumset(a, a, gamma)), 0)

    def test_full(self):
        a = IntSet.of([1, 4, 6])
        self.assertEqual(restricted_sumset(a, a, PairConstraint.full(a, a)), sumset(a, a))

    def test_lattice(self):
        a = random_lattice(self.rng, 3, 2, 10)
        removed = self.rng.integers(0, len(a), size=(30, 2))
        gamma = PairConstraint(a, a, removed)
        self.assertEqual(set(restricted_sumset(a, a, gamma, self.budget)), oracles.lattice_sums(a, a, gamma))

    def test_foreign_gamma(self):
        a, b = IntSet.of([1, 2]), IntSet.of([1, 2, 3])
        gamma = PairConstraint(a, a, [[0, 1]])
        with self.assertRaises(ReferenceMismatch):
            restricted_sumset(a, b, gamma)

    def test_removed_pair_outside(self):
        a = IntSet.of([1, 2])
        with self.assertRaises(InvalidParameter):
            PairConstraint(a, a, [[0, 2]])


class DilationTest(base.LabTestCase):

    def test_dilate(self):
        self.assertEqual(dilate(IntSet.of([1, 2, 3]), 2), IntSet.of([2, 4, 6]))
        self.assertEqual(dilate(IntSet.of([-3, 0, 5]), -2), IntSet.of([-10, 0, 6]))
        self.assertEqual(dilate(IntSet.of([-3, 0, 5]), 0), IntSet.of([0]))

    def test_midpoint_pairs(self):
        self.assertEqual(len(midpoint_pairs(IntSet.of([1, 2, 3]))), 5)
        self.assertEqual(len(midpoint_pairs(IntSet.of([0, 1]))), 2)
        self.assertEqual(count_three_term_progressions(IntSet.of([1, 2, 3])), 2)
        diagonal = LatticeSet(2, 2, [[0, 0], [1, 1], [2, 2]])
        self.assertEqual(midpoint_pairs(diagonal).tolist(), [[0, 0], [0, 2], [1, 1], [2, 0], [2, 2]])

    def test_midpoint_pairs_symmetric(self):
        for a in (random_set(self.rng, 25, 30), random_lattice(self.rng, 2, 3, 20)):
            pairs = set(map(tuple, midpoint_pairs(a).tolist()))
            self.assertEqual(pairs, {(j, i) for i, j in pairs})
            self.assertLessEqual({(i, i) for i in range(len(a))}, pairs)

    def test_ap_cover(self):
        self.assertEqual(minimal_ap_cover(IntSet.of([2, 5, 8, 14])), ApCover(2, 3, 5))
        self.assertEqual(minimal_ap_cover(IntSet.of([0, 7])), ApCover(0, 7, 2))
        self.assertEqual(minimal_ap_cover(IntSet.of([0, 1, 2, 9])), ApCover(0, 1, 10))
        self.assertTrue(ApCover(2, 3, 5).covers(IntSet.of([2, 5, 14])))
        with self.assertRaises(InvalidParameter):
            minimal_ap_cover(IntSet.of([3]))

    def test_ap_cover_length(self):
        for a in (IntSet.of([4, 10, 16]), IntSet.interval(-3, 7), IntSet.of([-9, 1])):
            self.assertEqual(minimal_ap_cover(a).length, len(a))
        for a in (IntSet.of([0, 1, 3]), IntSet.of([0, 2, 3, 4]), IntSet.of([1, 5, 9, 14])):
            self.assertGreater(minimal_ap_cover(a).length, len(a))
        for _ in range(30):
            a = random_set(self.rng, int(self.rng.integers(2, 8)), 10)
            self.assertEqual(minimal_ap_cover(a).length == len(a), oracles.common_difference(a) is not None)


class FreimanTest(base.LabTestCase):

    def test_embed_values(self):
        a = LatticeSet(2, 3, [[1, 2], [-3, -3]])
        self.assertEqual(embed_values(a, 30).tolist(), [-93, 61])
        self.assertEqual(freiman_embed(a, 30), IntSet.of([-93, 61]))
        with self.assertRaises(InvalidParameter):
            embed_values(a, 29)

    def test_decode(self):
        a = random_lattice(self.rng, 3, 4, 20)
        self.assertTrue(np.array_equal(decode_values(embed_values(a, 40), 40, 3), a.points))

    def test_sumset_size_preserved(self):
        for d in (1, 2, 3):
            a = random_lattice(self.rng, d, 3, 15)
            image = freiman_embed(a, 30)
            self.assertEqual(len(sumset(image, image)), len(oracles.lattice_sums(a, a)))

    def test_quadruples_exhaustive(self):
        a = random_lattice(self.rng, 3, 5, 12)
        values = embed_values(a, 50)
        self.assertEqual(oracles.sum_classes(a.points.tolist()), oracles.sum_classes(values.tolist()))

    def test_quadruples_sampled(self):
        a = random_lattice(self.rng, 4, 3, 600)
        values = embed_values(a, 30)
        by_value = {v: i for i, v in enumerate(values.tolist())}
        by_point = {tuple(p): i for i, p in enumerate(a.points.tolist())}
        i, j, k = self.rng.integers(0, len(a), size=(3, 20_000))
        lattice_targets = (a.points[i] + a.points[j] - a.points[k]).tolist()
        integer_targets = (values[i] + values[j] - values[k]).tolist()
        hits = 0
        for p, v in zip(lattice_targets, integer_targets):
            self.assertEqual(by_value.get(v), by_point.get(tuple(p)))
            hits += tuple(p) in by_point
        self.assertGreater(hits, 0)


class ReportTest(base.LabTestCase):

    def test_doubling(self):
        report = doubling_report(IntSet.interval(1, 10))
        self.assertEqual(report.K, Fraction(19, 10))
        self.assertEqual(report.doubling, Fraction(19, 10))
        self.assertEqual(report.delta, 0)

    def test_json(self):
        self.assertEqual(to_json(IntSet.of([1, 3, 5])), {"type": "int_set", "elements": [1, 3, 5]})
        self.assertEqual(to_json(IntSet.interval(1, 100)), {"type": "int_set", "runs": [[1, 100]]})
        a = IntSet.of([1, 3, 5])
        gamma = from_json({"type": "pair_complement", "removed": [[2, 0], [0, 1]]}, a)
        self.assertEqual(gamma.removed.tolist(), [[0, 1], [2, 0]])
        with self.assertRaises(ReferenceMismatch):
            from_json({"type": "pair_complement", "removed": []})
        with self.assertRaises(InvalidParameter):
            from_json({"type": "bitmap"})


if __name__ == "__main__":
    unittest.main()
