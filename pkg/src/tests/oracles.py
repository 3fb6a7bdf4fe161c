import math
from fractions import Fraction

import numpy as np

from bsglab import AnnulusSpec, IntSet, LatticeSet, PairConstraint


def sumset(a: IntSet, b: IntSet) -> IntSet:
    x, y = np.array(list(a), dtype=np.int64), np.array(list(b), dtype=np.int64)
    return IntSet.of((x[:, None] + y[None, :]).ravel())


def representation_counts(a: IntSet, b: IntSet, targets) -> list[int]:
    members = set(b)
    return [sum(1 for x in a if t - x in members) for t in targets]


def lattice_sums(a: LatticeSet, b: LatticeSet, gamma: PairConstraint | None = None) -> set[tuple[int, ...]]:
    removed = set(map(tuple, gamma.removed.tolist())) if gamma is not None else set()
    return {
        tuple(x + y for x, y in zip(p, q))
        for i, p in enumerate(a)
        for j, q in enumerate(b)
        if (i, j) not in removed
    }


def annulus_member(point: tuple[int, ...], spec: AnnulusSpec) -> bool:
    far = [max(abs(c), abs(c + 1)) for c in point]
    near = [0 if c <= 0 <= c + 1 else min(abs(c), abs(c + 1)) for c in point]
    m = Fraction(spec.M)
    return (
        sum(Fraction(f) ** 2 for f in far) <= m**2
        and sum(Fraction(n) ** 2 for n in near) >= (1 - spec.eta) ** 2 * m**2
        and all(Fraction(f) <= spec.trim * m for f in far)
    )


def planar_overlap_area(eta: float, dist: float, step: float = 0.001) -> float:
    """Area of S n (S + (dist, 0)) counted on the midpoints of a square grid."""
    inner = (1 - eta) ** 2
    xs = np.arange(-1 + step / 2, 1, step)
    total = 0
    for x in xs:
        ys = xs
        r1 = x * x + ys * ys
        r2 = (x - dist) ** 2 + ys * ys
        total += int(((r1 >= inner) & (r1 <= 1) & (r2 >= inner) & (r2 <= 1)).sum())
    return total * step * step


def sum_classes(elements: list) -> set[frozenset[tuple[int, int]]]:
    """Ordered index pairs grouped by the value of their sum; elements are ints or coordinate lists."""
    classes = dict[object, set[tuple[int, int]]]()
    for i, p in enumerate(elements):
        for j, q in enumerate(elements):
            key = tuple(x + y for x, y in zip(p, q)) if isinstance(p, list) else p + q
            classes.setdefault(key, set()).add((i, j))
    return {frozenset(pairs) for pairs in classes.values()}


def common_difference(a: IntSet) -> int | None:
    values = list(a)
    steps = {y - x for x, y in zip(values, values[1:])}
    return steps.pop() if len(steps) == 1 else None


def planar_cap_deficit(h: float) -> float:
    """Area of B(0, 2) beyond the chord x_1 = 2(1 - h), i.e. four unit-disc segments of height h."""
    return 4 * (math.acos(1 - h) - (1 - h) * math.sqrt(2 * h - h * h))
