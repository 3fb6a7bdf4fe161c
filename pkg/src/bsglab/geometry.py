import logging
import math
import typing
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameter, TheoremViolation

logger = logging.getLogger(__name__)

# relative tolerance of every quadrature in this module
QUAD_RTOL = 1e-10
# slack on norm comparisons of floating-point witnesses
NORM_SLACK = 1e-12
DEFAULT_CHUNK = 1 << 16


class VolumeEstimate(typing.NamedTuple):
    value: float
    std_error: float
    samples: int
    seed: int | None
    method: typing.Literal["exact", "monte_carlo"]
    hits: int = 0
    chunk: int = 0
    reference: float = math.nan

    @property
    def ratio(self) -> float:
        return self.value / self.reference if self.reference else math.nan

    def within(self, expected: float, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.value - expected) <= sigmas * self.std_error + floor

    def as_dict(self) -> dict[str, typing.Any]:
        out = self._asdict()
        out["ratio"] = self.ratio
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in out.items()}


def _exact(value: float, reference: float = math.nan) -> VolumeEstimate:
    return VolumeEstimate(float(value), 0.0, 0, None, "exact", reference=float(reference))


def _unit_ball(d: int) -> float:
    return math.exp(0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d + 1))


# exact volumes


def ball_volume(d: int) -> VolumeEstimate:
    if d < 1:
        raise InvalidParameter(f"Dimension must be positive, got {d}")
    v = _unit_ball(d)
    if d <= 64:
        lo, hi = d ** (-d / 2), 10.0**d * d ** (-d / 2)
        if not lo * (1 - 1e-12) <= v <= hi * (1 + 1e-12):
            raise TheoremViolation(f"V_{d} = {v} outside [{lo}, {hi}]")
    return _exact(v)


def _check_eta(eta: float):
    if not 0 < eta <= 1:
        raise InvalidParameter(f"eta must lie in (0, 1], got {eta}")


def annulus_volume(d: int, eta: float) -> VolumeEstimate:
    _check_eta(eta)
    v = _unit_ball(d)
    shell = -math.expm1(d * math.log1p(-eta)) if eta < 1 else 1.0
    return _exact(shell * v, reference=d * eta * v)


def _section(d: int, radius: float, x: float) -> float:
    # (d-1)-volume of the slice {x_1 = x} of the ball of the given radius
    rest = radius * radius - x * x
    return _unit_ball(d - 1) * rest ** ((d - 1) / 2) if rest > 0 else 0.0


def _quad(f, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    value, _ = integrate.quad(f, lo, hi, epsrel=QUAD_RTOL, epsabs=0.0, limit=200)
    return value


def cap_volume(d: int, h: float) -> VolumeEstimate:
    if d < 2 or not 0 < h <= 1:
        raise InvalidParameter(f"cap_volume needs d >= 2 and h in (0, 1], got d={d}, h={h}")
    value = _quad(lambda x: _section(d, 1.0, x), 1 - h, 1)
    return _exact(value, reference=2**d * _unit_ball(d - 1) * h ** ((d + 1) / 2))


def annulus_section_mass(d: int, eta: float, lo: float, hi: float) -> float:
    """Volume of {x in S : lo <= x_1 <= hi}."""
    inner = 1 - eta
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    return _quad(lambda x: _section(d, 1.0, x) - _section(d, inner, x), lo, hi)


def trimmed_annulus_volume(d: int, eta: float, trim: float) -> VolumeEstimate:
    _check_eta(eta)
    full = annulus_volume(d, eta).value
    if trim >= 1:
        return _exact(full)
    if trim <= 1 / math.sqrt(2):
        raise InvalidParameter(f"trim must exceed 2^(-1/2) so the corner caps are disjoint, got {trim}")
    # at most one coordinate can exceed trim, so the 2d removed pieces are disjoint
    return _exact(full - 2 * d * annulus_section_mass(d, eta, trim, 1.0))


# sampling


def sample_ball(rng: np.random.Generator, d: int, n: int, radius: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.random(n) ** (1 / d))[:, None]


def sample_annulus(rng: np.random.Generator, d: int, eta: float, n: int) -> np.ndarray:
    """Uniform points of {1 - eta <= |x| <= 1} by radial inversion."""
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    lo = (1 - eta) ** d
    r = (lo + rng.random(n) * (1 - lo)) ** (1 / d)
    return g * r[:, None]


def _in_annulus(x: np.ndarray, eta: float, slack: float = 0.0) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    return (r >= 1 - eta - slack) & (r <= 1 + slack)


def _run_chunks(seed: int, samples: int, chunk: int, fn, workers: int | None) -> list[tuple[int, ...]]:
    sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(sizes))]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, rngs, sizes))
    return list(map(fn, rngs, sizes))


def _summed(parts: list[tuple[int, ...]]) -> list[int]:
    return [sum(column) for column in zip(*parts)]


def _binomial(scale: float, hits: int, samples: int, seed: int, chunk: int, reference: float) -> VolumeEstimate:
    p = hits / samples
    return VolumeEstimate(
        value=scale * p,
        std_error=scale * math.sqrt(p * (1 - p) / samples),
        samples=samples,
        seed=seed,
        method="monte_carlo",
        hits=hits,
        chunk=chunk,
        reference=reference,
    )


def _check_samples(samples: int, least: int = 1):
    if samples < least:
        raise InvalidParameter(f"Need at least {least} samples, got {samples}")


# monte carlo


def mc_volume_T(
    d: int, eta: float, samples: int, seed: int, chunk: int = DEFAULT_CHUNK, workers: int | None = None
) -> VolumeEstimate:
    """vol{(x, y) : x, x - y, x + y in S} with x uniform in S and y uniform in B(0, sqrt(2 eta))."""
    _check_eta(eta)
    _check_samples(samples, 1000)
    radius = math.sqrt(2 * eta)
    bound = 1 - (1 - eta) ** 2 + NORM_SLACK

    def run(rng: np.random.Generator, n: int) -> tuple[int]:
        x = sample_annulus(rng, d, eta, n)
        y = sample_ball(rng, d, n, radius)
        hit = _in_annulus(x + y, eta) & _in_annulus(x - y, eta)
        if hit.any() and (np.einsum("ij,ij->i", y[hit], y[hit]) > bound).any():
            raise TheoremViolation("accepted sample with |y|^2 > 1 - (1 - eta)^2")
        return (int(hit.sum()),)

    (hits,) = _summed(_run_chunks(seed, samples, chunk, run, workers))
    vol_s = annulus_volume(d, eta).value
    scale = vol_s * _unit_ball(d) * radius**d
    if not hits:
        logger.warning("mc_volume_T: no accepted samples at d=%d eta=%g with %d samples", d, eta, samples)
    estimate = _binomial(scale, int(hits), samples, seed, chunk, (2 * eta) ** (d / 2 - 1) * vol_s**2)
    logger.info("vol(T) ~ %.6g +- %.2g (ratio %.4g)", estimate.value, estimate.std_error, estimate.ratio)
    return estimate


class SliceEstimate(typing.NamedTuple):
    R: VolumeEstimate
    R_minus: VolumeEstimate
    lower_bound: float
    floor: float


def mc_volume_Ry(
    d: int,
    eta: float,
    t: float,
    samples: int,
    seed: int,
    floor: float = 0.0,
    chunk: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> SliceEstimate:
    """vol(S n (y - S)) for y = (2 - t, 0, ..., 0), with the slab set inside it estimated from the same draws."""
    _check_eta(eta)
    _check_samples(samples)
    if not 0 < t <= 2:
        raise InvalidParameter(f"t must lie in (0, 2], got {t}")
    y = np.zeros(d)
    y[0] = 2 - t
    check_slab = eta <= 2 / 3

    def run(rng: np.random.Generator, n: int) -> tuple[int, int]:
        x = sample_annulus(rng, d, eta, n)
        in_r = _in_annulus(y - x, eta)
        r = np.linalg.norm(x, axis=1)
        slab = (x[:, 0] >= 1 - t / 2) & (x[:, 0] <= 1 - t / 2 + eta / 8) & (r >= 1 - eta / 2)
        if check_slab and (slab & ~_in_annulus(y - x, eta, NORM_SLACK)).any():
            raise TheoremViolation(f"slab point outside R_y at d={d}, eta={eta}, t={t}")
        return int(in_r.sum()), int(slab.sum())

    hits, slab_hits = _summed(_run_chunks(seed, samples, chunk, run, workers))
    vol_s = annulus_volume(d, eta).value
    lower = _unit_ball(d - 1) * 2.0**-d * eta * t ** ((d - 1) / 2) * min(t, eta)
    r = _binomial(vol_s, int(hits), samples, seed, chunk, lower)
    r_minus = _binomial(vol_s, int(slab_hits), samples, seed, chunk, lower)
    if r.value < floor * lower:
        raise TheoremViolation(f"vol(R_y) ~ {r.value} below {floor} x {lower}")
    if not hits:
        logger.warning("mc_volume_Ry: no sample landed in R_y at d=%d eta=%g t=%g", d, eta, t)
    logger.info(
        "vol(R_y) ~ %.6g +- %.2g, slab part %.6g, lower-bound ratio %.4g", r.value, r.std_error, r_minus.value, r.ratio
    )
    return SliceEstimate(r, r_minus, lower, floor)


class IntersectionCheck(typing.NamedTuple):
    trials: int
    checked: int
    violations: int
    max_ratio: float
    seed: int

    def as_dict(self) -> dict[str, typing.Any]:
        return self._asdict()


def check_intersection_lemma(
    d: int, eta: float, trials: int, seed: int, chunk: int = DEFAULT_CHUNK, workers: int | None = None
) -> IntersectionCheck:
    """Witness-first pairs y_i = x + s_i with x, s_i in S; counts |y1 - y2| >= 2(t1^(1/2) + t2^(1/2))."""
    _check_eta(eta)
    _check_samples(trials)

    def run(rng: np.random.Generator, n: int) -> tuple[int, int, int]:
        x = sample_annulus(rng, d, eta, n)
        steps = list[np.ndarray]()
        for _ in range(2):
            s = sample_annulus(rng, d, eta, n)
            # steer half of the steps towards x so that t is small
            steer = rng.random(n) < 0.5
            direction = x / np.linalg.norm(x, axis=1, keepdims=True) + 0.1 * rng.standard_normal((n, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            s[steer] = direction[steer] * np.linalg.norm(s[steer], axis=1, keepdims=True)
            steps.append(s)
        y1, y2 = x + steps[0], x + steps[1]
        t1, t2 = 2 - np.linalg.norm(y1, axis=1), 2 - np.linalg.norm(y2, axis=1)
        valid = (t1 > 0) & (t1 < 2) & (t2 > 0) & (t2 < 2)
        gap = np.linalg.norm(y1 - y2, axis=1)
        limit = 2 * (np.sqrt(np.clip(t1, 0, None)) + np.sqrt(np.clip(t2, 0, None)))
        bad = valid & (gap >= limit + NORM_SLACK)
        ratio = np.where(valid & (limit > 0), gap / np.where(limit > 0, limit, 1), 0)
        # ratios are reported in parts per million to keep the reduction integral
        return int(valid.sum()), int(bad.sum()), int(ratio.max(initial=0) * 1_000_000)

    parts = _run_chunks(seed, trials, chunk, run, workers)
    checked, violations, _ = _summed(parts)
    ratio_ppm = max(r for _, _, r in parts)
    if violations:
        logger.error("intersection lemma: %d violations in %d checked pairs", violations, checked)
    return IntersectionCheck(trials, checked, violations, ratio_ppm / 1_000_000, seed)


# carved annuli


class Carve(typing.NamedTuple):
    kind: typing.Literal["none", "radial", "cap", "slab"] = "none"
    size: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "Carve":
        """'none', 'radial:<eps>', 'cap:<h>' or 'slab:<w>'."""
        kind, _, value = text.partition(":")
        if kind == "none" and not value:
            return cls()
        if kind in ("radial", "cap", "slab"):
            try:
                return cls(kind, float(value))
            except ValueError:
                pass
        raise InvalidParameter(f"Unknown carve '{text}'")

    def __str__(self) -> str:
        return self.kind if self.kind == "none" else f"{self.kind}:{self.size:g}"

    def mass(self, d: int, eta: float) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "radial":
            return _unit_ball(d) * -math.expm1(d * math.log1p(-self.size * eta))
        if self.kind == "cap":
            return annulus_section_mass(d, eta, 1 - self.size, 1.0)
        return annulus_section_mass(d, eta, -self.size / 2, self.size / 2)

    def keeps(self, x: np.ndarray, eta: float) -> np.ndarray:
        """Membership in S' = S minus the carved region, with witness slack."""
        inside = _in_annulus(x, eta, NORM_SLACK)
        if self.kind == "radial":
            return inside & (np.linalg.norm(x, axis=-1) <= 1 - self.size * eta + NORM_SLACK)
        if self.kind == "cap":
            return inside & (x[..., 0] <= 1 - self.size)
        if self.kind == "slab":
            return inside & (np.abs(x[..., 0]) >= self.size / 2)
        return inside


class CarveReport(typing.NamedTuple):
    carve: Carve
    mass: float
    mass_budget: float
    missing: VolumeEstimate
    deficit_fraction: float
    witness_budget: int

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "carve": str(self.carve),
            "mass": self.mass,
            "mass_budget": self.mass_budget,
            "missing": self.missing.as_dict(),
            "deficit_fraction": self.deficit_fraction,
            "witness_budget": self.witness_budget,
        }


def _witness_found(rng: np.random.Generator, y: np.ndarray, eta: float, carve: Carve, budget: int) -> np.ndarray:
    n, d = y.shape
    norm = np.linalg.norm(y, axis=1)
    axis = np.zeros((n, d))
    axis[:, 0] = 1.0
    unit = np.where(norm[:, None] > 0, y / np.where(norm > 0, norm, 1)[:, None], axis)
    found = np.zeros(n, dtype=bool)
    lo = 1 - eta
    for k in range(budget):
        if k == 0:
            r1 = r2 = np.maximum(lo, norm / 2)
        else:
            r1 = rng.uniform(np.maximum(lo, norm - 1), 1.0)
            r2 = rng.uniform(np.maximum(lo, np.abs(norm - r1)), np.minimum(1.0, norm + r1))
        along = np.where(norm > 0, (norm**2 + r1**2 - r2**2) / (2 * np.where(norm > 0, norm, 1)), 0.0)
        across = np.sqrt(np.clip(r1**2 - along**2, 0, None))
        g = rng.standard_normal((n, d))
        g -= np.einsum("ij,ij->i", g, unit)[:, None] * unit
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        x = along[:, None] * unit + across[:, None] * g
        found |= carve.keeps(x, eta) & carve.keeps(y - x, eta)
        if found.all():
            break
    return found


def mc_check_prop42(
    d: int,
    eta: float,
    carve: Carve,
    samples: int,
    seed: int,
    mass_budget: float | None = None,
    witness_budget: int = 64,
    chunk: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> CarveReport:
    """vol((S + S) minus (S' + S')) by sampling B(0, 2) and searching for witnesses in S'."""
    _check_eta(eta)
    _check_samples(samples)
    vol_s = annulus_volume(d, eta).value
    budget = mass_budget if mass_budget is not None else 25.0**-d * eta**3 * vol_s
    mass = carve.mass(d, eta)
    if mass > budget:
        raise InvalidParameter(f"Carve {carve} removes {mass:.3g}, above the mass budget {budget:.3g}")

    def run(rng: np.random.Generator, n: int) -> tuple[int]:
        y = sample_ball(rng, d, n, 2.0)
        return (int((~_witness_found(rng, y, eta, carve, witness_budget)).sum()),)

    (missing,) = _summed(_run_chunks(seed, samples, chunk, run, workers))
    estimate = _binomial(2.0**d * _unit_ball(d), int(missing), samples, seed, chunk, vol_s)
    logger.info(
        "carve %s: mass %.3g, missing %.4g +- %.2g of vol(S)", carve, mass, estimate.ratio, estimate.std_error / vol_s
    )
    return CarveReport(carve, mass, budget, estimate, estimate.ratio, witness_budget)


# planar oracles


def _disc_overlap(r: float, s: float, dist: float) -> float:
    if dist >= r + s:
        return 0.0
    if dist <= abs(r - s):
        return math.pi * min(r, s) ** 2
    a = r * r * math.acos((dist * dist + r * r - s * s) / (2 * dist * r))
    b = s * s * math.acos((dist * dist + s * s - r * r) / (2 * dist * s))
    return a + b - 0.5 * math.sqrt((-dist + r + s) * (dist + r - s) * (dist - r + s) * (dist + r + s))


def planar_overlap_area(eta: float, dist: float) -> float:
    """Area of S n (S + z) in the plane for |z| = dist."""
    _check_eta(eta)
    inner = 1 - eta
    return (
        _disc_overlap(1.0, 1.0, dist)
        - 2 * _disc_overlap(1.0, inner, dist)
        + _disc_overlap(inner, inner, dist)
    )


def planar_T_volume(eta: float) -> float:
    """vol(T) for d = 2, integrating |S n (2x - S)| over x in S."""
    _check_eta(eta)
    return _quad(lambda r: 2 * math.pi * r * planar_overlap_area(eta, 2 * r), 1 - eta, 1.0)
