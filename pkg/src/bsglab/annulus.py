import logging
import math
import typing
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .config import Budget, ensure_within
from .errors import BudgetExceeded, EncodingOverflow, InvalidParameter, TheoremViolation
from .geometry import annulus_section_mass, ball_volume, trimmed_annulus_volume
from .search import SearchConfig, shrink_search
from .sets import (
    IntSet,
    LatticeSet,
    PairConstraint,
    ceil_div,
    dilate,
    embed_values,
    freiman_embed,
    midpoint_pairs,
    restricted_sumset,
    sumset,
)

logger = logging.getLogger(__name__)

_CHUNK = 1 << 20


def _is_dyadic(x: Fraction) -> bool:
    return x.denominator & (x.denominator - 1) == 0


class AnnulusSpec(typing.NamedTuple):
    d: int
    eta: Fraction
    M: int
    trim: Fraction

    @classmethod
    def make(
        cls, d: int, M: int, eta: Fraction | str | None = None, trim: Fraction | str | None = None
    ) -> "AnnulusSpec":
        eta = Fraction(eta) if eta is not None else Fraction(1, 2**d)
        trim = Fraction(trim) if trim is not None else Fraction(d**10 - 1, d**10)
        spec = cls(d, eta, M, trim)
        spec.validate()
        return spec

    def validate(self):
        if self.d < 2:
            raise InvalidParameter(f"Annulus dimension must be at least 2, got {self.d}")
        if not 0 < self.eta < 1 or not _is_dyadic(self.eta):
            raise InvalidParameter(f"eta must be a dyadic rational in (0, 1), got {self.eta}")
        if self.M < 1:
            raise InvalidParameter(f"M must be positive, got {self.M}")
        if not 0 < self.trim <= 1:
            raise InvalidParameter(f"trim must lie in (0, 1], got {self.trim}")

    def as_dict(self) -> dict[str, typing.Any]:
        return {"d": self.d, "eta": str(self.eta), "M": self.M, "trim": str(self.trim)}


class CounterexampleSpec(typing.NamedTuple):
    lam: Fraction
    annulus: AnnulusSpec
    L: int
    C_exp: float = 1.0

    @classmethod
    def make(
        cls,
        lam: Fraction | str,
        d: int,
        M: int,
        eta: Fraction | str | None = None,
        trim: Fraction | str | None = None,
        C_exp: float = 1.0,
    ) -> "CounterexampleSpec":
        lam = Fraction(lam)
        if not 0 < lam < Fraction(1, 2):
            raise InvalidParameter(f"lambda must lie in (0, 1/2), got {lam}")
        return cls(lam, AnnulusSpec.make(d, M, eta, trim), ceil_div(10 * lam.denominator, lam.numerator), C_exp)

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.annulus.d**2 / 3)

    @property
    def epsilon(self) -> float:
        d = self.annulus.d
        return float(self.lam) * d ** (-self.C_exp * d)

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "lambda": str(self.lam),
            **self.annulus.as_dict(),
            "L": self.L,
            "C_exp": self.C_exp,
            "delta": self.delta,
            "epsilon": self.epsilon,
        }


# enumeration


class _Coordinates(typing.NamedTuple):
    values: np.ndarray
    far: np.ndarray
    near: np.ndarray


def _coordinates(spec: AnnulusSpec) -> _Coordinates:
    # squared distances of the farthest and nearest cube corners, per coordinate value
    v = np.arange(-spec.M, spec.M + 1, dtype=np.int64)
    far = np.maximum(np.abs(v), np.abs(v + 1))
    near = np.where((v == -1) | (v == 0), 0, np.minimum(np.abs(v), np.abs(v + 1)))
    keep = far * spec.trim.denominator <= spec.trim.numerator * spec.M
    return _Coordinates(v[keep], far[keep] ** 2, near[keep] ** 2)


def _scales(spec: AnnulusSpec) -> tuple[int, int, int]:
    # sum(near^2) den^2 >= (den - num)^2 M^2 is condition (ii) cleared of denominators
    den2 = spec.eta.denominator**2
    target = (spec.eta.denominator - spec.eta.numerator) ** 2 * spec.M**2
    if spec.d * spec.M**2 * den2 >= 1 << 62:
        raise EncodingOverflow(f"Annulus test at M={spec.M}, eta={spec.eta} leaves the 62-bit range")
    return spec.M**2, den2, target


def _slab(spec: AnnulusSpec, table: _Coordinates, first: int) -> np.ndarray:
    m2, den2, target = _scales(spec)
    points = table.values[first : first + 1, None]
    far = table.far[first : first + 1]
    near = table.near[first : first + 1]
    width = len(table.values)
    for level in range(1, spec.d + 1):
        remaining = spec.d - level
        if remaining:
            keep = (far + remaining <= m2) & ((near + m2 - far) * den2 >= target)
        else:
            keep = (far <= m2) & (near * den2 >= target)
        points, far, near = points[keep], far[keep], near[keep]
        if remaining == 0 or not len(points):
            break
        grown_points, grown_far, grown_near = list[np.ndarray](), list[np.ndarray](), list[np.ndarray]()
        step = max(1, _CHUNK // width)
        for s in range(0, len(points), step):
            k = len(points[s : s + step])
            rows = np.repeat(np.arange(s, s + k), width)
            cols = np.tile(np.arange(width), k)
            grown_points.append(np.column_stack((points[rows], table.values[cols])))
            grown_far.append(far[rows] + table.far[cols])
            grown_near.append(near[rows] + table.near[cols])
        points = np.concatenate(grown_points)
        far, near = np.concatenate(grown_far), np.concatenate(grown_near)
    return points.reshape(-1, spec.d)


def estimated_candidates(spec: AnnulusSpec) -> float:
    outer = spec.M + math.sqrt(spec.d)
    inner = max(0.0, float(1 - spec.eta) * spec.M - math.sqrt(spec.d))
    return ball_volume(spec.d).value * (outer**spec.d - inner**spec.d)


def build_annulus_set(spec: AnnulusSpec, budget: Budget | None = None, workers: int | None = None) -> LatticeSet:
    spec.validate()
    ensure_within(budget, "max_points", estimated_candidates(spec), "annulus enumeration (estimated points)")
    table = _coordinates(spec)
    firsts = list(range(len(table.values)))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slabs = list(pool.map(lambda i: _slab(spec, table, i), firsts))
    else:
        slabs = [_slab(spec, table, i) for i in firsts]
    points = np.concatenate(slabs) if slabs else np.empty((0, spec.d), dtype=np.int64)
    ensure_within(budget, "max_points", len(points), "annulus points")
    logger.info("annulus d=%d eta=%s M=%d: %d points", spec.d, spec.eta, spec.M, len(points))
    return LatticeSet(spec.d, spec.M, points)


def trimmed_count(spec: AnnulusSpec, budget: Budget | None = None) -> int:
    """Points passing both norm conditions that the corner trim removes."""
    untrimmed = build_annulus_set(spec._replace(trim=Fraction(1)), budget)
    return len(untrimmed) - len(build_annulus_set(spec, budget))


def reflect(a: LatticeSet, axis: int) -> LatticeSet:
    """Image under the reflection x_axis -> -x_axis of the cubes B_M(a), i.e. a_axis -> -a_axis - 1."""
    pts = a.points.copy()
    pts[:, axis] = -pts[:, axis] - 1
    return LatticeSet(a.dim, a.box_radius, pts)


def cube_centres(a: LatticeSet) -> LatticeSet:
    """2a + (1, ..., 1), the doubled centres of the cubes; symmetric under negation when a is under reflections."""
    return LatticeSet(a.dim, 2 * a.box_radius, 2 * a.points + 1)


# gamma and projection


def build_midpoint_gamma(a: LatticeSet | IntSet, budget: Budget | None = None) -> PairConstraint:
    removed = midpoint_pairs(a, budget)
    gamma = PairConstraint(a, a, removed)
    logger.info(
        "midpoint gamma: %d removed pairs of %d (density %.4g)", len(removed), gamma.total, float(gamma.density)
    )
    return gamma


def midpoint_reference(d: int, eta: Fraction) -> float:
    return 6.0**d * float(eta) ** (d / 2 - 1)


def project_to_z(a: LatticeSet) -> IntSet:
    return freiman_embed(a, 10 * max(a.box_radius, 1))


def interior(a: LatticeSet) -> LatticeSet:
    keep = np.ones(len(a), dtype=bool)
    for corner in np.ndindex(*(2,) * a.dim):
        if any(corner):
            keep &= a.contains_many(a.points + np.array(corner, dtype=np.int64))
    return a.subset(keep)


class InteriorReport(typing.NamedTuple):
    inclusion_holds: bool
    interior_size: int
    size: int
    floor: float

    @property
    def ratio(self) -> float:
        return self.interior_size / self.size if self.size else math.nan


def check_interior_inclusion(a: LatticeSet, a_prime: LatticeSet, eta: Fraction) -> InteriorReport:
    """A minus Int(A') lies in ((A minus A') - {0,1}^d) u (A minus Int(A))."""
    if not a.contains_many(a_prime.points).all():
        raise InvalidParameter("A' is not a subset of A")
    lost = a.subset(~a_prime.contains_many(a.points))
    shadow = [lost.points - np.array(corner, dtype=np.int64) for corner in np.ndindex(*(2,) * a.dim)]
    radius = a.box_radius + 1
    cover = LatticeSet(a.dim, radius, np.concatenate(shadow)) if len(lost) else LatticeSet(a.dim, radius, [])
    inner, inner_prime = interior(a), interior(a_prime)
    outside = a.points[~inner_prime.contains_many(a.points)]
    holds = bool((cover.contains_many(outside) | ~inner.contains_many(outside)).all())
    if not holds:
        raise TheoremViolation("A minus Int(A') escapes the shadow of A minus A'")
    return InteriorReport(holds, len(inner_prime), len(a), 1 - 50.0 ** -a.dim * float(eta) ** 3)


# verification


class MissingSums(typing.NamedTuple):
    U1: IntSet
    U2: IntSet
    U3: IntSet
    anomalies: IntSet

    @property
    def total(self) -> int:
        return len(self.U1) + len(self.U2) + len(self.U3)


def classify_missing_sums(
    a: IntSet, a_prime: IntSet, N: int, L: int, budget: Budget | None = None
) -> MissingSums:
    if not a_prime.issubset(a):
        raise InvalidParameter("A' is not a subset of A")
    missing = sumset(a, a, budget).difference(sumset(a_prime, a_prime, budget))
    ranges = ((-2 * N, 0), (1, 2 * N), (2 * N + 1, 2 * L * N))
    u1, u2, u3 = (missing.window(lo, hi) for lo, hi in ranges)
    anomalies = missing.difference(u1).difference(u2).difference(u3)
    if len(anomalies):
        logger.warning("%d missing sums outside the three ranges", len(anomalies))
    return MissingSums(u1, u2, u3, anomalies)


class PropertyReport(typing.NamedTuple):
    size: int
    interval_ratio: float
    doubling: Fraction
    doubling_reference: float
    doubles_missing: bool
    shrink_removed: int
    shrink_loss: int
    shrink_allowance: Fraction
    shrink_holds: bool
    neighbour_window: int
    neighbour_min: int
    neighbour_fraction: Fraction
    interval_bound: int | None = None
    interval_within_bound: bool | None = None

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "size": self.size,
            "interval_ratio": self.interval_ratio,
            "doubling": float(self.doubling),
            "doubling_vs_4^d": float(self.doubling) / self.doubling_reference,
            "doubles_missing": self.doubles_missing,
            "shrink_removed": self.shrink_removed,
            "shrink_loss": self.shrink_loss,
            "shrink_allowance": float(self.shrink_allowance),
            "shrink_holds": self.shrink_holds,
            "neighbour_window": self.neighbour_window,
            "neighbour_min": self.neighbour_min,
            "neighbour_fraction": float(self.neighbour_fraction),
            "interval_bound": self.interval_bound,
            "interval_within_bound": self.interval_within_bound,
        }


def _nearest_counts(values: np.ndarray, window: int) -> np.ndarray:
    return np.searchsorted(values, values + window, side="right") - np.searchsorted(values, values - window)


def verify_properties(
    a0: IntSet, gamma0: PairConstraint, d: int, budget: Budget | None = None, box_radius: int | None = None
) -> PropertyReport:
    """Properties of a projected set; with box_radius, A0 is also checked against [-(10R)^d / 2, (10R)^d / 2]."""
    n = len(a0)
    if n == 0:
        raise InvalidParameter("verify_properties needs a non-empty set")
    full = sumset(a0, a0, budget)
    doubles = dilate(a0, 2, budget)
    missing = full.difference(restricted_sumset(a0, a0, gamma0, budget))
    shrink = shrink_search(a0, SearchConfig(Fraction(1, 800**d), "greedy"), budget)
    loss = len(full) - shrink.achieved
    window = n // 10
    values = a0.to_array(budget)
    nearest = int(_nearest_counts(values, window).min())
    bound = (10 * box_radius) ** d // 2 if box_radius is not None else None
    report = PropertyReport(
        size=n,
        interval_ratio=(a0.max - a0.min + 1) / n,
        doubling=Fraction(len(full), n),
        doubling_reference=4.0**d,
        doubles_missing=doubles.issubset(missing),
        shrink_removed=len(shrink.removed),
        shrink_loss=loss,
        shrink_allowance=Fraction(n, 80),
        shrink_holds=loss <= Fraction(n, 80),
        neighbour_window=window,
        neighbour_min=nearest,
        neighbour_fraction=Fraction(nearest, n),
        interval_bound=bound,
        interval_within_bound=None if bound is None else -bound <= a0.min and a0.max <= bound,
    )
    logger.info(
        "properties: interval/|A|=%.4g |A+A|/|A|=%.4g 2A missing=%s shrink loss %d/%d neighbours %.4g",
        report.interval_ratio,
        float(report.doubling),
        report.doubles_missing,
        loss,
        n,
        float(report.neighbour_fraction),
    )
    return report


class VolumeBounds(typing.NamedTuple):
    size: int
    sumset_size: int
    trimmed_volume: float
    sumset_cap: float
    size_cap: float
    holds: bool


def check_volume_bounds(spec: AnnulusSpec, a: LatticeSet, budget: Budget | None = None) -> VolumeBounds:
    """|A + A| <= 2^d V_d M^d and |A| <= vol(trimmed S) M^d."""
    scale = spec.M**spec.d
    vol = trimmed_annulus_volume(spec.d, float(spec.eta), float(spec.trim)).value
    sum_size = len(sumset(a, a, budget))
    sumset_cap = 2.0**spec.d * ball_volume(spec.d).value * scale
    size_cap = vol * scale
    holds = sum_size <= sumset_cap * (1 + 1e-9) and len(a) <= size_cap * (1 + 1e-9)
    if not holds:
        raise TheoremViolation(f"|A|={len(a)}, |A+A|={sum_size} exceed {size_cap:.6g}, {sumset_cap:.6g}")
    return VolumeBounds(len(a), sum_size, vol, sumset_cap, size_cap, holds)


class SlabReport(typing.NamedTuple):
    width: float
    last_coordinate: int
    slab_count: int
    slab_volume: float
    count_ratio: float
    count_holds: bool
    max_distance: int
    distance_cap: float
    distance_holds: bool


def check_neighbour_slabs(spec: AnnulusSpec, a: LatticeSet) -> SlabReport:
    """Cubes meeting the slab |x_d - t/M| <= (30d)^-d, for every last coordinate t of A.

    Their count is compared with M^d times the slab volume of the untrimmed annulus, reported at the
    worst t. Distances are measured between projected cube centres, i.e. inside A0.
    """
    if not len(a):
        raise InvalidParameter("check_neighbour_slabs needs a non-empty set")
    d, M = spec.d, spec.M
    width = (30.0 * d) ** -d
    last = a.points[:, -1]
    centres = cube_centres(a)
    values = embed_values(centres, 10 * centres.box_radius)
    worst: tuple[float, int, int, float] | None = None
    max_distance = 0
    for t in np.unique(last).tolist():
        meets = (last + 1 >= t - width * M) & (last <= t + width * M)
        here, there = values[last == t], values[meets]
        max_distance = max(max_distance, int(there.max() - here.min()), int(here.max() - there.min()))
        volume = annulus_section_mass(d, float(spec.eta), t / M - width, t / M + width)
        count = int(meets.sum())
        ratio = count / (M**d * volume) if volume > 0 else math.inf
        if worst is None or ratio < worst[0]:
            worst = (ratio, t, count, volume)
    assert worst is not None
    ratio, t, count, volume = worst
    cap = 0.1 * len(a)
    report = SlabReport(width, t, count, volume, ratio, ratio >= 1, max_distance, cap, max_distance <= cap)
    logger.info(
        "neighbour slabs: worst t=%d holds %d cubes (%.4g x M^d vol), max distance %d vs %.4g",
        t,
        count,
        ratio,
        max_distance,
        cap,
    )
    return report


# counterexample


class Counterexample(typing.NamedTuple):
    spec: CounterexampleSpec
    lattice: LatticeSet
    A0: IntSet
    gamma0: PairConstraint
    A: IntSet
    gamma: PairConstraint
    N: int
    report: dict[str, typing.Any]


def build_counterexample(
    spec: CounterexampleSpec, budget: Budget | None = None, workers: int | None = None
) -> Counterexample:
    lattice = build_annulus_set(spec.annulus, budget, workers)
    if not len(lattice):
        raise InvalidParameter(f"Annulus at {spec.annulus.as_dict()} holds no lattice cubes")
    centres = cube_centres(lattice)
    a0 = project_to_z(centres)
    assert a0 == a0.negated()
    to_a0 = a0.index_of(embed_values(centres, 10 * centres.box_radius))
    gamma0 = build_midpoint_gamma(lattice, budget).reindexed(a0, a0, to_a0, to_a0)
    n = a0.max
    a = a0.union(IntSet.interval(n + 1, spec.L * n))
    gamma = PairConstraint(a, a, gamma0.removed)

    full = sumset(a, a, budget)
    restricted = restricted_sumset(a, a, gamma, budget)
    floor = len(full) - ceil_div(len(a0), 2)
    if len(restricted) > floor:
        raise TheoremViolation(f"|A +_Gamma A| = {len(restricted)} above |A+A| - |A0|/2 = {floor}")
    doubling = Fraction(len(full), len(a))
    report = {
        "spec": spec.as_dict(),
        "lattice_size": len(lattice),
        "size_A0": len(a0),
        "N": n,
        "size_A": len(a),
        "sumset_size": len(full),
        "restricted_size": len(restricted),
        "missing_sum_floor": floor,
        "removed_pairs": gamma.removed_count,
        "delta_actual": float(gamma.density),
        "delta_A0": float(gamma0.density),
        "midpoint_density_vs_reference": float(gamma0.density) / midpoint_reference(spec.annulus.d, spec.annulus.eta),
        "doubling": float(doubling),
        "doubling_target": float(2 + spec.lam),
        "doubling_within_target": doubling <= 2 + spec.lam,
    }
    logger.info(
        "counterexample: |A0|=%d N=%d |A|=%d |A+A|/|A|=%.5g (target %.5g) delta=%.4g",
        len(a0),
        n,
        len(a),
        float(doubling),
        float(2 + spec.lam),
        float(gamma.density),
    )
    return Counterexample(spec, lattice, a0, gamma0, a, gamma, n, report)


def greedy_adversarial_subset(
    ce: Counterexample, epsilon: Fraction, budget: Budget | None = None
) -> tuple[IntSet, str]:
    """Greedy A' of A when A fits the budget, otherwise a greedy A0' joined with all of (N, LN]."""
    cfg = SearchConfig(Fraction(epsilon), "greedy")
    try:
        return shrink_search(ce.A, cfg, budget).A_prime, "A"
    except BudgetExceeded as e:
        logger.warning("greedy search over A skipped (%s), searching A0 instead", e)
    shrunk = shrink_search(ce.A0, cfg, budget).A_prime
    return shrunk.union(ce.A.window(ce.N + 1, ce.spec.L * ce.N)), "A0"
