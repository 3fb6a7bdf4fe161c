import csv
import io
import itertools
import logging
import math
import typing
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import Budget, ensure_within
from .errors import BudgetExceeded, InvalidParameter, TheoremViolation
from .sets import IntSet, PairConstraint, restricted_sumset, sumset

logger = logging.getLogger(__name__)

Strategy = typing.Literal["exhaustive", "greedy", "local_search"]
STRATEGIES = ("exhaustive", "greedy", "local_search")
FRONTIER_HEADER = ("epsilon", "delta", "margin", "strategy", "certified")


class SearchConfig(typing.NamedTuple):
    epsilon: Fraction
    strategy: Strategy = "greedy"
    steps: int = 10_000
    seed: int = 0

    def removal_count(self, n: int) -> int:
        eps = Fraction(self.epsilon)
        return eps.numerator * n // eps.denominator


class ShrinkResult(typing.NamedTuple):
    A_prime: IntSet
    achieved: int
    removed: list[int]
    strategy: str
    certified: bool

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "size_A_prime": len(self.A_prime),
            "achieved": self.achieved,
            "removed": self.removed,
            "strategy": self.strategy,
            "certified": self.certified,
        }


class FrontierRow(typing.NamedTuple):
    epsilon: Fraction
    delta: Fraction
    margin: Fraction | None
    strategy: str
    certified: bool


# representation table


class _Table:
    """Ordered representation counts of A' + A' with the sum of min(u, v) over them."""

    def __init__(self, values: np.ndarray, budget: Budget | None):
        ensure_within(budget, "table_pairs", len(values) * len(values), "representation table")
        self.values = values
        self.alive = np.ones(len(values), dtype=bool)
        self.sums = sumset(IntSet.from_sorted(values), IntSet.from_sorted(values), budget).to_array(budget)
        self.count = np.zeros(len(self.sums), dtype=np.int64)
        self.low = np.zeros(len(self.sums), dtype=np.int64)
        for i, u in enumerate(values.tolist()):
            pos = np.searchsorted(self.sums, u + values[i + 1 :])
            self.count[pos] += 2
            self.low[pos] += 2 * u
            diag = np.searchsorted(self.sums, 2 * u)
            self.count[diag] += 1
            self.low[diag] += u
        self.size = len(self.sums)
        self.loss = np.zeros(len(values), dtype=np.int64)
        self._credit(np.arange(len(self.sums)), 1)

    def _owners(self, pos: np.ndarray) -> np.ndarray:
        one = pos[self.count[pos] == 1]
        two = pos[self.count[pos] == 2]
        half = self.low[two] // 2
        owners = np.concatenate((self.low[one], half, self.sums[two] - half))
        return np.searchsorted(self.values, owners)

    def _credit(self, pos: np.ndarray, sign: int):
        np.add.at(self.loss, self._owners(pos), sign)

    def remove(self, i: int):
        u = int(self.values[i])
        self.alive[i] = False
        others = self.values[self.alive]
        pos = np.searchsorted(self.sums, u + others)
        diag = np.searchsorted(self.sums, np.array([2 * u]))
        touched = np.concatenate((pos, diag))
        self._credit(touched, -1)
        self.count[pos] -= 2
        self.low[pos] -= 2 * np.minimum(u, others)
        self.count[diag] -= 1
        self.low[diag] -= u
        assert (self.count[touched] >= 0).all()
        self.size -= int((self.count[touched] == 0).sum())
        self._credit(touched, 1)

    def lost_after(self, removed: np.ndarray) -> int:
        """Number of current sums that vanish when the given values are removed as well."""
        if not len(removed):
            return 0
        others = self.values[self.alive]
        both = (removed[:, None] + removed[None, :]).ravel()
        hit, c1 = np.unique((removed[:, None] + others[None, :]).ravel(), return_counts=True)
        pos = np.searchsorted(self.sums, hit)
        lost = 2 * c1
        inner, c2 = np.unique(both, return_counts=True)
        lost -= np.where(np.isin(hit, inner), c2[np.searchsorted(inner, hit).clip(0, len(inner) - 1)], 0)
        return int((self.count[pos] == lost).sum())


# search


def _greedy(table: _Table, k: int) -> list[int]:
    removed = list[int]()
    for step in range(k):
        loss = np.where(table.alive, table.loss, -1)
        i = int(np.argmax(loss))
        logger.debug("greedy step %d: remove %d (loses %d sums)", step, table.values[i], loss[i])
        table.remove(i)
        removed.append(int(table.values[i]))
    return removed


def _exhaustive(values: np.ndarray, table: _Table, k: int, budget: Budget | None) -> list[int]:
    ensure_within(budget, "exhaustive_subsets", math.comb(len(values), k), "exhaustive subsets")
    best, best_lost = list[int](), -1
    for combo in itertools.combinations(range(len(values)), k):
        lost = table.lost_after(values[list(combo)])
        if lost > best_lost:
            best, best_lost = [int(values[i]) for i in combo], lost
    return best


def _local_search(values: np.ndarray, start: list[int], table: _Table, steps: int) -> list[int]:
    current = sorted(start)
    current_lost = table.lost_after(np.array(current, dtype=np.int64))
    evaluations = 0
    improved = True
    while improved and evaluations < steps:
        improved = False
        kept = np.setdiff1d(values, current)
        for j, out in enumerate(current):
            for candidate in kept.tolist():
                trial = sorted(current[:j] + current[j + 1 :] + [candidate])
                lost = table.lost_after(np.array(trial, dtype=np.int64))
                evaluations += 1
                if lost > current_lost:
                    logger.debug("swap %d -> %d gains %d sums", out, candidate, lost - current_lost)
                    current, current_lost, improved = trial, lost, True
                    break
                if evaluations >= steps:
                    break
            if improved or evaluations >= steps:
                break
    return current


def shrink_search(a: IntSet, cfg: SearchConfig, budget: Budget | None = None) -> ShrinkResult:
    if cfg.strategy not in STRATEGIES:
        raise InvalidParameter(f"Unknown search strategy '{cfg.strategy}'")
    if not 0 <= cfg.epsilon < 1:
        raise InvalidParameter(f"epsilon must lie in [0, 1), got {cfg.epsilon}")
    k = cfg.removal_count(len(a))
    if k == 0:
        return ShrinkResult(a, len(sumset(a, a, budget)), [], cfg.strategy, True)
    values = a.to_array(budget)
    if cfg.strategy == "greedy":
        table = _Table(values, budget)
        removed = _greedy(table, k)
    else:
        table = _Table(values, budget)
        if cfg.strategy == "exhaustive":
            removed = _exhaustive(values, table, k, budget)
        else:
            greedy_table = _Table(values, budget)
            removed = _local_search(values, _greedy(greedy_table, k), table, cfg.steps)
    a_prime = a.without(removed)
    achieved = len(sumset(a_prime, a_prime, budget))
    if cfg.strategy == "greedy" and achieved != table.size:
        raise TheoremViolation(f"incremental sumset size {table.size} differs from recomputed {achieved}")
    logger.info("%s shrink: removed %d of %d, |A'+A'| = %d", cfg.strategy, k, len(a), achieved)
    return ShrinkResult(a_prime, achieved, sorted(removed), cfg.strategy, cfg.strategy == "exhaustive")


def frontier_probe(
    a: IntSet,
    gamma: PairConstraint,
    eps_grid: typing.Iterable[Fraction],
    strategy: Strategy = "greedy",
    steps: int = 10_000,
    budget: Budget | None = None,
) -> list[FrontierRow]:
    n = len(a)
    if n == 0:
        raise InvalidParameter("frontier_probe needs a non-empty set")
    restricted = len(restricted_sumset(a, a, gamma, budget))
    rows = list[FrontierRow]()
    for eps in eps_grid:
        eps = Fraction(eps)
        try:
            found = shrink_search(a, SearchConfig(eps, strategy, steps), budget)
        except BudgetExceeded as e:
            logger.warning("frontier row epsilon=%s skipped: %s", eps, e)
            rows.append(FrontierRow(eps, gamma.density, None, "skipped", False))
            continue
        margin = Fraction(found.achieved - restricted, n)
        rows.append(FrontierRow(eps, gamma.density, margin, found.strategy, margin > eps or found.certified))
        logger.info("frontier epsilon=%s: margin %.6g", eps, float(margin))
    return rows


def format_cell(x: typing.Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return f"{float(x):.12g}"
    return str(x)


def frontier_csv(rows: list[FrontierRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FRONTIER_HEADER)
    for row in rows:
        writer.writerow([format_cell(x) for x in row])
    return buffer.getvalue()


def write_frontier_csv(rows: list[FrontierRow], path: str | Path):
    Path(path).write_text(frontier_csv(rows), encoding="utf-8")
