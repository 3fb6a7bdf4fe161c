import logging
import math
import typing
from fractions import Fraction

import numpy as np

from .config import Budget, ensure_within
from .errors import HypothesisViolated, InvalidParameter, TheoremViolation
from .sets import (
    ApCover,
    IntSet,
    PairConstraint,
    minimal_ap_cover,
    representation_counts,
    restricted_sumset,
    sumset,
)

logger = logging.getLogger(__name__)

# groups


class Group(typing.NamedTuple):
    kind: typing.Literal["integers", "cyclic", "vector"]
    modulus: int = 0
    prime: int = 0
    exponent: int = 0

    @classmethod
    def integers(cls) -> "Group":
        return cls("integers")

    @classmethod
    def cyclic(cls, m: int) -> "Group":
        if m < 1:
            raise InvalidParameter(f"Cyclic group order must be positive, got {m}")
        return cls("cyclic", modulus=m)

    @classmethod
    def vector(cls, p: int, n: int) -> "Group":
        if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)) or n < 1:
            raise InvalidParameter(f"F_p^n needs a prime p and n >= 1, got p={p}, n={n}")
        return cls("vector", prime=p, exponent=n)

    @classmethod
    def parse(cls, text: str) -> "Group":
        """'integers', 'cyclic:m' or 'vector:p:n'."""
        kind, *args = text.split(":")
        try:
            if kind == "integers" and not args:
                return cls.integers()
            if kind == "cyclic" and len(args) == 1:
                return cls.cyclic(int(args[0]))
            if kind == "vector" and len(args) == 2:
                return cls.vector(int(args[0]), int(args[1]))
        except ValueError:
            pass
        raise InvalidParameter(f"Unknown group '{text}'")

    def __str__(self) -> str:
        if self.kind == "cyclic":
            return f"cyclic:{self.modulus}"
        if self.kind == "vector":
            return f"vector:{self.prime}:{self.exponent}"
        return "integers"

    @property
    def order(self) -> int | None:
        if self.kind == "cyclic":
            return self.modulus
        if self.kind == "vector":
            return self.prime**self.exponent
        return None

    def validate(self, s: IntSet, name: str):
        if self.order is not None and len(s) and (s.min < 0 or s.max >= self.order):
            raise InvalidParameter(f"{name} holds encodings outside {self} (expected 0..{self.order - 1})")

    def add(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.kind == "integers":
            return x + y
        if self.kind == "cyclic":
            return (x + y) % self.modulus
        # F_p^n: base-p digits added digitwise mod p
        out = np.zeros(np.broadcast(x, y).shape, dtype=np.int64)
        scale = 1
        for _ in range(self.exponent):
            out += ((x // scale) % self.prime + (y // scale) % self.prime) % self.prime * scale
            scale *= self.prime
        return out


class RemovalInstance(typing.NamedTuple):
    A: IntSet
    B: IntSet
    C: IntSet
    group: Group = Group.integers()

    def validate(self):
        for name, part in (("A", self.A), ("B", self.B), ("C", self.C)):
            self.group.validate(part, name)


class RemovalSolution(typing.NamedTuple):
    A_prime: IntSet
    B_prime: IntSet
    C_prime: IntSet
    removed_count: int
    removed: list[tuple[str, int]]
    mode: str
    certified: bool


class ExtractionResult(typing.NamedTuple):
    A_prime: IntSet
    B_prime: IntSet
    threshold: int
    delta: Fraction
    K: Fraction
    restricted_size: int
    extracted_sumset_size: int
    bound: float
    holds: bool

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "size_A_prime": len(self.A_prime),
            "size_B_prime": len(self.B_prime),
            "threshold": self.threshold,
            "delta": float(self.delta),
            "K": float(self.K),
            "restricted_size": self.restricted_size,
            "extracted_sumset_size": self.extracted_sumset_size,
            "bound": self.bound,
            "holds": self.holds,
        }


class ApCoverReport(typing.NamedTuple):
    P: ApCover
    Q: ApCover
    same_difference: bool
    size_cap: Fraction
    sizes_within_cap: bool
    A_in_P: int
    B_in_Q: int
    membership_floor: Fraction
    memberships_hold: bool
    hypothesis_holds: bool

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "P": self.P._asdict(),
            "Q": self.Q._asdict(),
            "same_difference": self.same_difference,
            "size_cap": float(self.size_cap),
            "sizes_within_cap": self.sizes_within_cap,
            "A_in_P": self.A_in_P,
            "B_in_Q": self.B_in_Q,
            "membership_floor": float(self.membership_floor),
            "memberships_hold": self.memberships_hold,
            "hypothesis_holds": self.hypothesis_holds,
        }


# extraction


def _high_degree(s: IntSet, removed_side: np.ndarray, r: int) -> IntSet:
    # elements losing more than isqrt(r) partners fall below the degree threshold
    index, missing = np.unique(removed_side, return_counts=True)
    return s.without(s.element_at(index[missing > math.isqrt(r)]))


def bsg_extract(a: IntSet, b: IntSet, gamma: PairConstraint, budget: Budget | None = None) -> ExtractionResult:
    n = len(a)
    if n < 1 or len(b) != n:
        raise InvalidParameter(f"bsg_extract needs |A| = |B| >= 1, got {len(a)} and {len(b)}")
    restricted = restricted_sumset(a, b, gamma, budget)
    r = gamma.removed_count
    if 4 * r >= n * n:
        raise HypothesisViolated(f"delta = {r}/{n * n} is not below 1/4")

    # deg >= (1 - delta^(1/2)) N  <=>  (N - deg)^2 <= r
    threshold = n - math.isqrt(r)
    a_prime = _high_degree(a, gamma.removed[:, 0], r)
    b_prime = _high_degree(b, gamma.removed[:, 1], r)
    if len(a_prime) < threshold or len(b_prime) < threshold:
        raise TheoremViolation(f"Extracted sizes {len(a_prime)}, {len(b_prime)} below the floor {threshold}")

    x = len(sumset(a_prime, b_prime, budget))
    s = len(restricted)
    # X <= S^3 / (N - 2 sqrt r)^2, decided in integers
    lhs = x * (n * n + 4 * r) - s**3
    rhs = 4 * x * n
    holds = lhs <= 0 or lhs * lhs <= rhs * rhs * r
    bound = s**3 / (n - 2 * math.sqrt(r)) ** 2
    result = ExtractionResult(
        A_prime=a_prime,
        B_prime=b_prime,
        threshold=threshold,
        delta=gamma.density,
        K=Fraction(s, n),
        restricted_size=s,
        extracted_sumset_size=x,
        bound=bound,
        holds=holds,
    )
    logger.info(
        "extract: N=%d delta=%.6g K=%.6g |A'|=%d |B'|=%d |A'+B'|=%d bound=%.6g",
        n,
        float(result.delta),
        float(result.K),
        len(a_prime),
        len(b_prime),
        x,
        bound,
    )
    if not holds:
        raise TheoremViolation(f"|A'+B'| = {x} exceeds K^3 N / (1 - 2 delta^(1/2))^2 = {bound}")
    return result


def check_ap_cover(
    a: IntSet,
    b: IntSet,
    gamma: PairConstraint,
    epsilon: Fraction,
    a_prime: IntSet,
    b_prime: IntSet,
    budget: Budget | None = None,
) -> ApCoverReport:
    n = len(a)
    s = len(restricted_sumset(a, b, gamma, budget))
    p, q = minimal_ap_cover(a_prime), minimal_ap_cover(b_prime)
    floor = (1 - epsilon) * n
    cap = s - floor + 1
    a_in_p, b_in_q = p.count_in(a), q.count_in(b)
    return ApCoverReport(
        P=p,
        Q=q,
        same_difference=p.diff == q.diff,
        size_cap=cap,
        sizes_within_cap=p.length <= cap and q.length <= cap,
        A_in_P=a_in_p,
        B_in_Q=b_in_q,
        membership_floor=floor,
        memberships_hold=a_in_p >= floor and b_in_q >= floor,
        hypothesis_holds=s <= (3 - epsilon) * n - 4,
    )


# duality


def bsg_to_removal(a: IntSet, b: IntSet, gamma: PairConstraint, budget: Budget | None = None) -> RemovalInstance:
    c = sumset(a, b, budget).difference(restricted_sumset(a, b, gamma, budget))
    logger.info("dualize: |C| = %d missing sums from %d removed pairs", len(c), gamma.removed_count)
    return RemovalInstance(a, b, c)


def _integer_solution_pairs(a: IntSet, b: IntSet, c: IntSet, budget: Budget | None) -> np.ndarray:
    if not len(a) or not len(b) or not len(c):
        return np.empty((0, 2), dtype=np.int64)
    av = a.to_array(budget)
    if len(c) < len(b):
        ensure_within(budget, "max_pairs", len(a) * len(c), "solution enumeration")
        cv = c.to_array(budget)
        step = max(1, (1 << 22) // len(av))
        found = list[np.ndarray]()
        for k in range(0, len(cv), step):
            rest = cv[k : k + step, None] - av[None, :]
            ci, ai = np.nonzero(b.contains_many(rest))
            found.append(np.column_stack((ai, b.index_of(rest[ci, ai]))))
        pairs = np.concatenate(found)
    else:
        ensure_within(budget, "max_pairs", len(a) * len(b), "solution enumeration")
        bv = b.to_array(budget)
        step = max(1, (1 << 22) // len(bv))
        found = list[np.ndarray]()
        for k in range(0, len(av), step):
            ai, bj = np.nonzero(c.contains_many(av[k : k + step, None] + bv[None, :]))
            found.append(np.column_stack((ai + k, bj)))
        pairs = np.concatenate(found)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def solutions(inst: RemovalInstance, budget: Budget | None = None) -> np.ndarray:
    """Index triples (i, j, k) with A[i] + B[j] = C[k] under the group law, ordered."""
    inst.validate()
    if inst.group.kind == "integers":
        pairs = _integer_solution_pairs(inst.A, inst.B, inst.C, budget)
        if not len(pairs):
            return np.empty((0, 3), dtype=np.int64)
        total = inst.A.element_at(pairs[:, 0]) + inst.B.element_at(pairs[:, 1])
        return np.column_stack((pairs, inst.C.index_of(total)))
    ensure_within(budget, "max_pairs", len(inst.A) * len(inst.B), "solution enumeration")
    av, bv = inst.A.to_array(budget), inst.B.to_array(budget)
    total = inst.group.add(av[:, None], bv[None, :])
    ai, bj = np.nonzero(inst.C.contains_many(total))
    return np.column_stack((ai, bj, inst.C.index_of(total[ai, bj])))


def solution_count(inst: RemovalInstance, budget: Budget | None = None) -> int:
    """Ordered triples (a, b, c) in A x B x C with a + b = c."""
    if inst.group.kind == "integers":
        inst.validate()
        return int(representation_counts(inst.A, inst.B, inst.C.to_array(budget), budget).sum())
    return len(solutions(inst, budget))


def removal_to_bsg(inst: RemovalInstance, budget: Budget | None = None) -> tuple[IntSet, IntSet, PairConstraint]:
    if inst.group.kind != "integers":
        raise InvalidParameter(f"removal_to_bsg works over the integers, got {inst.group}")
    pairs = _integer_solution_pairs(inst.A, inst.B, inst.C, budget)
    return inst.A, inst.B, PairConstraint(inst.A, inst.B, pairs)


def exceptional_set(inst: RemovalInstance, solution: RemovalSolution) -> IntSet:
    return inst.C.difference(solution.C_prime)


# removal solver

_PART_RANK = {"C": 0, "B": 1, "A": 2}


class _Hypergraph(typing.NamedTuple):
    vertices: list[tuple[str, int]]
    edges: np.ndarray


def _hypergraph(inst: RemovalInstance, budget: Budget | None) -> _Hypergraph:
    triples = solutions(inst, budget)
    parts = (("A", inst.A), ("B", inst.B), ("C", inst.C))
    keyed = sorted(
        ((int(v), _PART_RANK[name], name, col, i) for col, (name, part) in enumerate(parts) for i, v in enumerate(part))
    )
    ids = [np.zeros(len(part), dtype=np.int64) for _, part in parts]
    vertices = list[tuple[str, int]]()
    for vid, (value, _, name, col, i) in enumerate(keyed):
        ids[col][i] = vid
        vertices.append((name, value))
    if len(triples):
        edges = np.column_stack([ids[col][triples[:, col]] for col in range(3)])
    else:
        edges = np.empty((0, 3), np.int64)
    return _Hypergraph(vertices, edges)


def _greedy_cover(graph: _Hypergraph) -> list[int]:
    alive = np.ones(len(graph.edges), dtype=bool)
    chosen = list[int]()
    while alive.any():
        degree = np.bincount(graph.edges[alive].ravel(), minlength=len(graph.vertices))
        v = int(np.argmax(degree))
        chosen.append(v)
        alive &= ~(graph.edges == v).any(axis=1)
        logger.debug("greedy removal: %s %d (degree %d)", *graph.vertices[v], degree[v])
    return chosen


def _exact_cover(graph: _Hypergraph, initial: list[int]) -> list[int]:
    masks = [(1 << int(x)) | (1 << int(y)) | (1 << int(z)) for x, y, z in graph.edges]
    best = {"mask": sum(1 << v for v in initial), "size": len(initial)}
    nodes = 0

    def lower_bound(open_edges: list[int]) -> int:
        used, count = 0, 0
        for m in open_edges:
            if not m & used:
                used |= m
                count += 1
        return count

    def branch(chosen: int, size: int):
        nonlocal nodes
        nodes += 1
        open_edges = [m for m in masks if not m & chosen]
        if not open_edges:
            if size < best["size"]:
                best["mask"], best["size"] = chosen, size
            return
        if size + lower_bound(open_edges) >= best["size"]:
            return
        first = open_edges[0]
        for v in range(len(graph.vertices)):
            if first >> v & 1:
                branch(chosen | 1 << v, size + 1)

    branch(0, 0)
    logger.debug("branch and bound: %d nodes, minimum %d", nodes, best["size"])
    return [v for v in range(len(graph.vertices)) if best["mask"] >> v & 1]


def solve_removal(
    inst: RemovalInstance,
    mode: typing.Literal["exhaustive", "greedy"] = "greedy",
    budget: Budget | None = None,
) -> RemovalSolution:
    if mode not in ("exhaustive", "greedy"):
        raise InvalidParameter(f"Unknown removal mode '{mode}'")
    size = len(inst.A) + len(inst.B) + len(inst.C)
    if mode == "exhaustive":
        ensure_within(budget, "exhaustive_removal", size, "exhaustive removal (|A|+|B|+|C|)")
    graph = _hypergraph(inst, budget)
    chosen = _greedy_cover(graph)
    if mode == "exhaustive":
        chosen = _exact_cover(graph, chosen)
    removed = [graph.vertices[v] for v in sorted(chosen)]
    drop = {name: [value for part, value in removed if part == name] for name in ("A", "B", "C")}
    solution = RemovalSolution(
        A_prime=inst.A.without(drop["A"]),
        B_prime=inst.B.without(drop["B"]),
        C_prime=inst.C.without(drop["C"]),
        removed_count=len(removed),
        removed=removed,
        mode=mode,
        certified=mode == "exhaustive",
    )
    left = RemovalInstance(solution.A_prime, solution.B_prime, solution.C_prime, inst.group)
    if len(solutions(left, budget)):
        raise TheoremViolation(f"{mode} removal left solutions to a + b = c")
    logger.info("%s removal: %d of %d elements removed, %d solutions", mode, len(removed), size, len(graph.edges))
    return solution


class DualityReport(typing.NamedTuple):
    instance: RemovalInstance
    solution_count: int
    solution: RemovalSolution
    exceptional: IntSet
    covered: bool

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "size_C": len(self.instance.C),
            "solution_count": self.solution_count,
            "solution_count_convention": "ordered triples (a, b, c)",
            "removed_count": self.solution.removed_count,
            "mode": self.solution.mode,
            "certified": self.solution.certified,
            "exceptional_size": len(self.exceptional),
            "extracted_sumset_covered": self.covered,
        }


def dualize(
    a: IntSet,
    b: IntSet,
    gamma: PairConstraint,
    mode: typing.Literal["exhaustive", "greedy"] = "greedy",
    budget: Budget | None = None,
) -> DualityReport:
    """Removal instance of (A, B, Gamma), a solution, and the check A'+B' in (A +_Gamma B) u S."""
    inst = bsg_to_removal(a, b, gamma, budget)
    count = solution_count(inst, budget)
    if count > gamma.removed_count:
        raise TheoremViolation(f"{count} solutions exceed the {gamma.removed_count} removed pairs")
    solution = solve_removal(inst, mode, budget)
    s = exceptional_set(inst, solution)
    target = restricted_sumset(a, b, gamma, budget).union(s)
    covered = sumset(solution.A_prime, solution.B_prime, budget).issubset(target)
    if not covered:
        raise TheoremViolation("A' + B' is not contained in (A +_Gamma B) u S")
    return DualityReport(inst, count, solution, s, covered)
