import numpy as np

from bsglab import IntSet, LatticeSet, PairConstraint
from bsglab.pipeline import random_pair_constraint, random_set


def random_instance(
    rng: np.random.Generator, max_size: int = 30, spread: int = 60, removed_share: float = 0.5
) -> tuple[IntSet, IntSet, PairConstraint]:
    a = random_set(rng, int(rng.integers(1, max_size + 1)), spread)
    b = random_set(rng, int(rng.integers(1, max_size + 1)), spread)
    removed = int(rng.integers(0, int(len(a) * len(b) * removed_share) + 1))
    return a, b, random_pair_constraint(rng, a, b, removed)


def random_lattice(rng: np.random.Generator, dim: int, box_radius: int, size: int) -> LatticeSet:
    return LatticeSet(dim, box_radius, rng.integers(-box_radius, box_radius + 1, size=(size, dim)))
