import unittest
from fractions import Fraction

from bsglab import (
    DEFAULT_BUDGET,
    IntSet,
    InvalidParameter,
    PairConstraint,
    SearchConfig,
    frontier_probe,
    shrink_search,
    sumset,
)
from bsglab.pipeline import random_set
from bsglab.search import FRONTIER_HEADER, frontier_csv

from . import base
from .instances.blocks import corner_removed


class ShrinkTest(base.LabTestCase):

    def test_interval(self):
        a = IntSet.interval(1, 10)
        exhaustive = shrink_search(a, SearchConfig(Fraction(1, 5), "exhaustive"), self.budget)
        self.assertEqual(exhaustive.achieved, 15)
        self.assertTrue(exhaustive.certified)
        self.assertEqual(len(exhaustive.removed), 2)
        greedy = shrink_search(a, SearchConfig(Fraction(1, 5), "greedy"), self.budget)
        self.assertEqual(greedy.achieved, 15)
        self.assertFalse(greedy.certified)
        self.assertEqual(len(sumset(greedy.A_prime, greedy.A_prime)), greedy.achieved)

    def test_nothing_removed(self):
        a = IntSet.of([1, 4, 9, 16])
        result = shrink_search(a, SearchConfig(Fraction(1, 10)), self.budget)
        self.assertEqual(result.A_prime, a)
        self.assertEqual(result.removed, [])
        self.assertEqual(result.achieved, len(sumset(a, a)))

    def test_strategies_ordered(self):
        for _ in range(10):
            a = random_set(self.rng, int(self.rng.integers(5, 13)), 25)
            cfg = SearchConfig(Fraction(1, 4))
            exhaustive = shrink_search(a, cfg._replace(strategy="exhaustive"), self.budget)
            greedy = shrink_search(a, cfg, self.budget)
            local = shrink_search(a, cfg._replace(strategy="local_search", steps=500), self.budget)
            self.assertLessEqual(exhaustive.achieved, local.achieved)
            self.assertLessEqual(local.achieved, greedy.achieved)
            self.assertEqual(len(greedy.removed), cfg.removal_count(len(a)))

    def test_invalid(self):
        a = IntSet.interval(1, 10)
        with self.assertRaises(InvalidParameter):
            shrink_search(a, SearchConfig(Fraction(1)), self.budget)
        with self.assertRaises(InvalidParameter):
            shrink_search(a, SearchConfig(Fraction(1, 5), "annealing"), self.budget)  # type: ignore[arg-type]


class FrontierTest(base.LabTestCase):

    def test_full_gamma_has_no_margin(self):
        a = IntSet.interval(1, 40)
        rows = frontier_probe(a, PairConstraint.full(a, a), [Fraction(1, 10), Fraction(1, 5)], budget=self.budget)
        self.assertEqual([row.epsilon for row in rows], [Fraction(1, 10), Fraction(1, 5)])
        for row in rows:
            self.assertLessEqual(row.margin, 0)
            self.assertFalse(row.certified)
            self.assertEqual(row.delta, 0)

    def test_corner_removed(self):
        a, gamma = corner_removed(40, 4)
        rows = frontier_probe(a, gamma, [Fraction(1, 20)], budget=self.budget)
        self.assertEqual(rows[0].delta, Fraction(16, 1600))
        self.assertIsNotNone(rows[0].margin)

    def test_skipped_rows(self):
        a = IntSet.interval(1, 100)
        rows = frontier_probe(a, PairConstraint.full(a, a), [Fraction(1, 10)], budget={"table_pairs": 10})
        self.assertEqual(rows[0].strategy, "skipped")
        self.assertIsNone(rows[0].margin)

    def test_table_beyond_pair_cap(self):
        a = IntSet.interval(1, 12_000)
        self.assertGreater(len(a) ** 2, DEFAULT_BUDGET["max_pairs"])
        rows = frontier_probe(a, PairConstraint.full(a, a), [Fraction(1, 4000)], budget=DEFAULT_BUDGET)
        self.assertEqual(rows[0].strategy, "greedy")
        self.assertIsNotNone(rows[0].margin)

    def test_reference_table_fits(self):
        # |A0| of the d = 3, M = 30, lambda = 1/4 counterexample
        self.assertLessEqual(22_184**2, DEFAULT_BUDGET["table_pairs"])

    def test_empty_set(self):
        empty = IntSet.empty()
        with self.assertRaises(InvalidParameter):
            frontier_probe(empty, PairConstraint.full(empty, empty), [Fraction(1, 10)])

    def test_csv(self):
        a = IntSet.interval(1, 20)
        text = frontier_csv(frontier_probe(a, PairConstraint.full(a, a), [Fraction(1, 10)], budget=self.budget))
        lines = text.splitlines()
        self.assertEqual(lines[0], ",".join(FRONTIER_HEADER))
        self.assertEqual(len(lines), 2)
        self.assertTrue(lines[1].startswith("0.1,0,"))


if __name__ == "__main__":
    unittest.main()
