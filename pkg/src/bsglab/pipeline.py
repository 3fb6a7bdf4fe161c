import contextlib
import csv
import hashlib
import io
import json
import logging
import tempfile
import time
import typing
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import annulus, bsg, geometry, search
from .config import VERSION, Budget
from .errors import GoldenMismatch, LabError, TheoremViolation
from .sets import (
    IntSet,
    LatticeSet,
    PairConstraint,
    dumps,
    embed_values,
    freiman_embed,
    restricted_sumset,
    sumset,
    to_json,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
# removed-pair lists above this size are recorded by digest only
GAMMA_JSON_LIMIT = 2_000_000
EPSILON_DENOMINATOR = 1_000_000


# artifacts


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def file_digest(path: str | Path) -> str:
    return digest(Path(path).read_bytes())


class RunManifest(typing.NamedTuple):
    command: str
    params: dict[str, typing.Any]
    seed: int | None
    version: str
    inputs: dict[str, str]
    outputs: dict[str, str]
    wall_time: float

    def as_dict(self) -> dict[str, typing.Any]:
        return self._asdict()

    def write(self, path: str | Path):
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Bundle:
    """Output directory that remembers the digest of everything written into it."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.outputs = dict[str, str]()

    def write_text(self, name: str, text: str) -> Path:
        data = text.encode("utf-8")
        path = self.directory / name
        path.write_bytes(data)
        self.outputs[name] = digest(data)
        return path

    def write_json(self, name: str, payload: typing.Any) -> Path:
        return self.write_text(name, dumps(payload))

    def record(self, name: str, data: bytes):
        self.outputs[name] = digest(data)

    def manifest(
        self,
        command: str,
        params: dict[str, typing.Any],
        started: float,
        seed: int | None = None,
        inputs: dict[str, str] | None = None,
    ) -> RunManifest:
        manifest = RunManifest(
            command=command,
            params=params,
            seed=seed,
            version=VERSION,
            inputs=inputs or {},
            outputs=dict(sorted(self.outputs.items())),
            wall_time=round(time.perf_counter() - started, 3),
        )
        manifest.write(self.directory / MANIFEST_NAME)
        return manifest


@contextlib.contextmanager
def _stage(name: str):
    started = time.perf_counter()
    logger.info("stage %s", name)
    try:
        yield
    except (LabError, TheoremViolation) as e:
        logger.error("stage %s failed: %s", name, e)
        e.stage = name  # type: ignore[attr-defined]
        raise
    logger.debug("stage %s done in %.2fs", name, time.perf_counter() - started)


def check_golden(path: str | Path, values: dict[str, typing.Any]) -> bool:
    """Compare values against the golden file; keys it lacks are added. Returns True if the file was written."""
    path = Path(path)
    expected = dict[str, typing.Any]()
    if path.exists():
        try:
            expected = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise GoldenMismatch(f"golden file {path}", "valid JSON", str(e)) from None
        if not isinstance(expected, dict):
            raise GoldenMismatch(f"golden file {path}", "a JSON object", type(expected).__name__)
    for key in sorted(values):
        if key in expected and expected[key] != values[key]:
            raise GoldenMismatch(key, expected[key], values[key])
    missing = {k: v for k, v in values.items() if k not in expected}
    if missing:
        expected.update(missing)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("golden file %s: recorded %s", path, ", ".join(sorted(missing)))
    return bool(missing)


# counterexample pipeline


def reference_epsilon(spec: annulus.CounterexampleSpec) -> Fraction:
    return Fraction(spec.epsilon).limit_denominator(EPSILON_DENOMINATOR)


def default_eps_grid(spec: annulus.CounterexampleSpec) -> list[Fraction]:
    eps = reference_epsilon(spec)
    return [eps / 4, eps / 2, eps, eps * 2, eps * 4]


def _gamma_json(bundle: Bundle, name: str, gamma: PairConstraint):
    if gamma.removed_count <= GAMMA_JSON_LIMIT:
        bundle.write_json(name, to_json(gamma))
    else:
        logger.warning("%s: %d removed pairs, recording the digest only", name, gamma.removed_count)
        bundle.record(name.replace(".json", ".pairs"), np.ascontiguousarray(gamma.removed).tobytes())


def pipeline_counterexample(
    spec: annulus.CounterexampleSpec,
    out: str | Path,
    eps_grid: typing.Iterable[Fraction] | None = None,
    strategy: search.Strategy = "greedy",
    golden: str | Path | None = None,
    budget: Budget | None = None,
    workers: int | None = None,
) -> RunManifest:
    started = time.perf_counter()
    grid = list(eps_grid) if eps_grid is not None else default_eps_grid(spec)
    bundle = Bundle(out)
    d = spec.annulus.d

    with _stage("build"):
        ce = annulus.build_counterexample(spec, budget, workers)
        bundle.write_json("A.json", to_json(ce.A))
        bundle.write_json("A0.json", to_json(ce.A0))
        _gamma_json(bundle, "gamma.json", ce.gamma)
        bundle.write_json("counterexample.json", ce.report)

    with _stage("properties"):
        report = annulus.verify_properties(ce.A0, ce.gamma0, d, budget, box_radius=2 * spec.annulus.M)
        slabs = annulus.check_neighbour_slabs(spec.annulus, ce.lattice)
        bounds = annulus.check_volume_bounds(spec.annulus, ce.lattice, budget)

    with _stage("extraction"):
        extraction = bsg.bsg_extract(ce.A, ce.A, ce.gamma, budget)
        restricted = ce.report["restricted_size"]
        extracted = {
            **extraction.as_dict(),
            "sumset_margin": (extraction.extracted_sumset_size - restricted) / len(ce.A),
            "epsilon": spec.epsilon,
        }
        bundle.write_json("extraction.json", extracted)

    with _stage("interior"):
        centres = annulus.cube_centres(ce.lattice)
        kept = extraction.A_prime.contains_many(embed_values(centres, 10 * centres.box_radius))
        inner = annulus.check_interior_inclusion(ce.lattice, ce.lattice.subset(kept), spec.annulus.eta)
        bundle.write_json(
            "properties.json",
            {
                "properties": report.as_dict(),
                "volume_bounds": bounds._asdict(),
                "neighbour_slabs": slabs._asdict(),
                "interior": {**inner._asdict(), "ratio": inner.ratio},
                "trimmed_count": annulus.trimmed_count(spec.annulus, budget),
            },
        )

    with _stage("frontier"):
        rows = search.frontier_probe(ce.A, ce.gamma, grid, strategy, budget=budget)
        bundle.write_text("frontier.csv", search.frontier_csv(rows))
        rows0 = search.frontier_probe(ce.A0, ce.gamma0, grid, strategy, budget=budget)
        bundle.write_text("frontier_A0.csv", search.frontier_csv(rows0))
        for label, table in (("A", rows), ("A0", rows0)):
            at_eps = [row for row in table if row.epsilon == reference_epsilon(spec)]
            if at_eps and at_eps[0].margin is not None:
                logger.info("%s margin at epsilon=%.6g: %.6g", label, spec.epsilon, float(at_eps[0].margin))

    with _stage("missing sums"):
        a_prime, source = annulus.greedy_adversarial_subset(ce, reference_epsilon(spec), budget)
        missing = annulus.classify_missing_sums(ce.A, a_prime, ce.N, spec.L, budget)
        ratio = missing.total / (0.4 * len(ce.A0))
        logger.info("missing sums: %d, %.4g of 0.4|A0| (A' searched over %s)", missing.total, ratio, source)
        bundle.write_json(
            "missing_sums.json",
            {
                "U1": len(missing.U1),
                "U2": len(missing.U2),
                "U3": len(missing.U3),
                "total": missing.total,
                "total_vs_0.4_A0": ratio,
                "A_prime_source": source,
                "size_A_prime": len(a_prime),
                "anomalies": to_json(missing.anomalies),
                "ranges": [[-2 * ce.N, 0], [1, 2 * ce.N], [2 * ce.N + 1, 2 * spec.L * ce.N]],
            },
        )

    if golden is not None:
        with _stage("golden"):
            check_golden(golden, {f"digest:{name}": value for name, value in bundle.outputs.items()})

    params = {
        **spec.as_dict(),
        "eps_grid": [str(e) for e in grid],
        "strategy": strategy,
        "budget": dict(budget or {}),
        "workers": workers,
    }
    manifest = bundle.manifest("pipeline counterexample", params, started)
    logger.info("bundle written to %s (%d outputs)", bundle.directory, len(manifest.outputs))
    return manifest


# acceptance suite


Level = typing.Literal["quick", "full"]


class CriterionResult(typing.NamedTuple):
    number: int
    name: str
    passed: bool
    seconds: float
    details: dict[str, typing.Any]
    error: str | None = None


class SuiteSummary(typing.NamedTuple):
    level: str
    results: list[CriterionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> list[str]:
        return [f"{r.number}. {r.name}" for r in self.results if not r.passed]

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "level": self.level,
            "passed": self.passed,
            "version": VERSION,
            "criteria": [r._asdict() for r in self.results],
        }


def near_extremal_example(n: int = 1000, eps: Fraction = Fraction(1, 20)) -> tuple[IntSet, PairConstraint]:
    """{1, ..., (1-2eps)n} u {1.1n, ..., 1.2n} with every pair inside the top block removed."""
    low = int((1 - 2 * eps) * n)
    lo, hi = int(Fraction(11, 10) * n), int(Fraction(6, 5) * n)
    a = IntSet.interval(1, low).union(IntSet.interval(lo, hi))
    top = np.arange(low, len(a), dtype=np.int64)
    i, j = np.meshgrid(top, top, indexing="ij")
    return a, PairConstraint(a, a, np.column_stack((i.ravel(), j.ravel())))


def random_pair_constraint(rng: np.random.Generator, a: IntSet, b: IntSet, removed: int) -> PairConstraint:
    total = len(a) * len(b)
    codes = rng.choice(total, size=min(removed, total), replace=False)
    return PairConstraint(a, b, np.column_stack(np.divmod(codes, max(len(b), 1))))


def random_set(rng: np.random.Generator, size: int, spread: int) -> IntSet:
    return IntSet.of(rng.choice(np.arange(-spread, spread + 1), size=size, replace=False))


def brute_restricted_sumset(a: IntSet, b: IntSet, gamma: PairConstraint) -> IntSet:
    x, y = a.to_array(), b.to_array()
    sums = (x[:, None] + y[None, :]).ravel()
    keep = np.ones(len(sums), dtype=bool)
    keep[gamma.removed[:, 0] * len(y) + gamma.removed[:, 1]] = False
    return IntSet.of(sums[keep])


class _Suite:
    def __init__(
        self, level: Level, out: Path, golden: Path | None, seed: int, budget: Budget | None, workers: int | None
    ):
        self.level = level
        self.full = level == "full"
        self.out = out
        self.golden = golden
        self.seed = seed
        self.budget = budget
        self.workers = workers
        self.ratios = list[dict[str, typing.Any]]()
        self._lattices = dict[tuple[int, int, Fraction], LatticeSet]()

    def rng(self, number: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, number])

    def lattice(self, d: int, M: int, eta: Fraction) -> LatticeSet:
        key = (d, M, eta)
        if key not in self._lattices:
            spec = annulus.AnnulusSpec.make(d, M, eta)
            self._lattices[key] = annulus.build_annulus_set(spec, self.budget, self.workers)
        return self._lattices[key]

    def ratio(self, criterion: int, quantity: str, value: float, reference: float, **where: typing.Any):
        row = {"criterion": criterion, "quantity": quantity, **where, "value": value, "reference": reference}
        row["ratio"] = value / reference if reference else None
        self.ratios.append(row)

    def sumset_oracle(self) -> dict[str, typing.Any]:
        rng = self.rng(1)
        count = 200 if self.full else 50
        for _ in range(count):
            a = random_set(rng, int(rng.integers(1, 61)), 100)
            b = random_set(rng, int(rng.integers(1, 61)), 100)
            gamma = random_pair_constraint(rng, a, b, int(rng.integers(0, len(a) * len(b) + 1)))
            got, want = restricted_sumset(a, b, gamma, self.budget), brute_restricted_sumset(a, b, gamma)
            if got != want:
                raise TheoremViolation(f"restricted sumset differs from pair enumeration on {gamma!r}")
        return {"instances": count}

    def near_extremal(self) -> dict[str, typing.Any]:
        a, gamma = near_extremal_example()
        stats = restricted_sumset(a, a, gamma, self.budget)
        if len(stats) != 2099:
            raise TheoremViolation(f"|A +_Gamma A| = {len(stats)}, expected 2099")
        inst = bsg.bsg_to_removal(a, a, gamma, self.budget)
        count = bsg.solution_count(inst, self.budget)
        if count != 10201:
            raise TheoremViolation(f"{count} solutions in the block example, expected 10201")
        return {"restricted_size": len(stats), "K": str(Fraction(len(stats), len(a))), "solutions": count}

    def extraction(self) -> dict[str, typing.Any]:
        rng = self.rng(3)
        count = 500 if self.full else 100
        violations = 0
        for _ in range(count):
            n = int(rng.integers(1, 41))
            a, b = random_set(rng, n, 3 * n), random_set(rng, n, 3 * n)
            gamma = random_pair_constraint(rng, a, b, int(rng.integers(0, (n * n - 1) // 4 + 1)))
            try:
                bsg.bsg_extract(a, b, gamma, self.budget)
            except TheoremViolation as e:
                logger.error("extraction violation: %s", e)
                violations += 1
        if violations:
            raise TheoremViolation(f"{violations} extraction violations in {count} instances")
        return {"instances": count, "violations": 0}

    def duality(self) -> dict[str, typing.Any]:
        rng = self.rng(4)
        count = 200 if self.full else 50
        for _ in range(count):
            a = random_set(rng, int(rng.integers(1, 13)), 20)
            b = random_set(rng, int(rng.integers(1, 13)), 20)
            gamma = random_pair_constraint(rng, a, b, int(rng.integers(0, len(a) * len(b) // 3 + 1)))
            report = bsg.dualize(a, b, gamma, "greedy", self.budget)
            _, _, back = bsg.removal_to_bsg(report.instance, self.budget)
            if gamma.contains_pairs(back.removed).any():
                raise TheoremViolation("removal_to_bsg removed a pair that Gamma keeps")
            first, second = restricted_sumset(a, b, gamma, self.budget), restricted_sumset(a, b, back, self.budget)
            if first != second:
                raise TheoremViolation("round trip through the removal instance changed the restricted sumset")
            if len(first.intersection(report.instance.C)) or len(second.intersection(report.instance.C)):
                raise TheoremViolation("restricted sumset meets C")
        return {"instances": count}

    def freiman(self) -> dict[str, typing.Any]:
        rng = self.rng(5)
        for _ in range(20):
            d, M = int(rng.integers(1, 5)), int(rng.integers(1, 6))
            pts = rng.integers(-M, M + 1, size=(int(rng.integers(1, 16)), d))
            a = LatticeSet(d, M, pts)
            values = embed_values(a, 10 * M)
            lattice_sums = ((a.points[:, None, :] + a.points[None, :, :]) + 2 * M) @ (4 * M + 1) ** np.arange(d)
            integer_sums = values[:, None] + values[None, :]
            same_lattice = lattice_sums.ravel()[:, None] == lattice_sums.ravel()[None, :]
            same_integer = integer_sums.ravel()[:, None] == integer_sums.ravel()[None, :]
            if not np.array_equal(same_lattice, same_integer):
                raise TheoremViolation(f"additive quadruples not preserved at d={d}, M={M}")
            image = freiman_embed(a, 10 * M)
            if len(sumset(image, image, self.budget)) != len(sumset(a, a, self.budget)):
                raise TheoremViolation(f"|pi(A) + pi(A)| differs from |A + A| at d={d}, M={M}")
        return {"instances": 20}

    def midpoint_exactness(self) -> dict[str, typing.Any]:
        points = [(2, 20), (2, 30), (3, 20), (3, 30)] if self.full else [(2, 20), (2, 30), (3, 20)]
        checked = list[str]()
        for d, M in points:
            a = self.lattice(d, M, Fraction(1, 2**d))
            gamma = annulus.build_midpoint_gamma(a, self.budget)
            doubles = 2 * a.points
            if restricted_sumset(a, a, gamma, self.budget).contains_many(doubles).any():
                raise TheoremViolation(f"2A meets A +_Gamma A at d={d}, M={M}")
            if not sumset(a, a, self.budget).contains_many(doubles).all():
                raise TheoremViolation(f"2A escapes A + A at d={d}, M={M}")
            checked.append(f"d={d},M={M}")
        return {"checked": checked}

    def lattice_volume(self) -> dict[str, typing.Any]:
        d, eta = 3, Fraction(1, 8)
        scales = [20, 40, 80] if self.full else [10, 20, 40]
        spec = annulus.AnnulusSpec.make(d, scales[0], eta)
        vol = geometry.trimmed_annulus_volume(d, float(eta), float(spec.trim)).value
        gaps = list[float]()
        for M in scales:
            scaled = len(self.lattice(d, M, eta)) / M**d
            if scaled > vol * (1 + 1e-12):
                raise TheoremViolation(f"M^-d |A| = {scaled} above vol = {vol} at M={M}")
            gaps.append(vol - scaled)
            self.ratio(7, "scaled_size", scaled, vol, d=d, M=M, eta=str(eta))
        if any(later >= earlier for earlier, later in zip(gaps, gaps[1:])):
            raise TheoremViolation(f"lower-bound gap does not decrease across M={scales}: {gaps}")
        return {"volume": vol, "gaps": gaps}

    def midpoint_density(self) -> dict[str, typing.Any]:
        d, M, eta = (3, 30, Fraction(1, 8)) if self.full else (2, 20, Fraction(1, 4))
        a = self.lattice(d, M, eta)
        gamma = annulus.build_midpoint_gamma(a, self.budget)
        density = float(gamma.density)
        reference = annulus.midpoint_reference(d, eta)
        self.ratio(8, "midpoint_density", density, reference, d=d, M=M, eta=str(eta))
        logger.info("midpoint density %.6g at d=%d M=%d eta=%s (reference %.4g)", density, d, M, eta, reference)
        if self.full:
            if density >= 0.1:
                raise TheoremViolation(f"midpoint density {density} not below 1/10")
            if self.golden is not None:
                check_golden(self.golden, {f"midpoint_density:d={d},M={M},eta={eta}": density})
        return {"density": density, "reference": reference}

    def geometry(self) -> dict[str, typing.Any]:
        samples = 1_000_000 if self.full else 200_000
        seed = self.seed
        failures = list[str]()

        def agree(label: str, estimate: geometry.VolumeEstimate, exact: float):
            self.ratio(9, label, estimate.value, exact, std_error=estimate.std_error)
            if not estimate.within(exact, floor=1e-9):
                failures.append(f"{label}: {estimate.value:.6g} +- {estimate.std_error:.2g} vs {exact:.6g}")

        for eta in (0.5, 0.25, 0.125):
            estimate = geometry.mc_volume_T(2, eta, samples, seed, workers=self.workers)
            agree(f"T eta={eta}", estimate, geometry.planar_T_volume(eta))
        for eta, t in ((0.25, 0.5), (0.25, 1.0), (0.25, 2.0), (0.125, 0.25), (0.5, 1.0)):
            estimate = geometry.mc_volume_Ry(2, eta, t, samples, seed, workers=self.workers).R
            agree(f"R_y eta={eta} t={t}", estimate, geometry.planar_overlap_area(eta, 2 - t))
        for eta in (0.25, 0.125):
            carved = geometry.mc_check_prop42(2, eta, geometry.Carve(), samples // 10, seed, workers=self.workers)
            agree(f"S+S deficit eta={eta}", carved.missing, 0.0)
        if failures:
            raise TheoremViolation("; ".join(failures))
        trials = 100_000 if self.full else 20_000
        lemma = geometry.check_intersection_lemma(3, 0.125, trials, seed, workers=self.workers)
        if lemma.violations:
            raise TheoremViolation(f"{lemma.violations} intersection violations in {lemma.checked} pairs")
        for d in range(1, 65):
            geometry.ball_volume(d)
        return {"configurations": 10, "intersection": lemma.as_dict()}

    def _smoke_spec(self) -> annulus.CounterexampleSpec:
        return annulus.CounterexampleSpec.make(Fraction(1, 4), 2, 10)

    def frontier(self) -> dict[str, typing.Any]:
        if self.full:
            spec = annulus.CounterexampleSpec.make(Fraction(1, 4), 3, 30)
            manifest = pipeline_counterexample(
                spec, self.out / "counterexample", golden=self.golden, budget=self.budget, workers=self.workers
            )
        else:
            spec = self._smoke_spec()
            manifest = pipeline_counterexample(spec, self.out / "smoke", budget=self.budget, workers=self.workers)
        if "frontier.csv" not in manifest.outputs:
            raise TheoremViolation("pipeline did not emit the frontier table")
        return {"spec": spec.as_dict(), "outputs": len(manifest.outputs), "wall_time": manifest.wall_time}

    def determinism(self) -> dict[str, typing.Any]:
        first = geometry.mc_volume_T(3, 0.125, 50_000, self.seed, chunk=4096, workers=1)
        second = geometry.mc_volume_T(3, 0.125, 50_000, self.seed, chunk=4096, workers=4)
        if dumps(first.as_dict()) != dumps(second.as_dict()):
            raise TheoremViolation("mc_volume_T depends on the worker count")
        spec = self._smoke_spec()
        runs = [pipeline_counterexample(spec, self.out / f"rerun-{i}", budget=self.budget).outputs for i in range(2)]
        if runs[0] != runs[1]:
            changed = sorted(k for k in runs[0] if runs[0][k] != runs[1].get(k))
            raise TheoremViolation(f"pipeline reruns differ in {changed}")
        return {"outputs": len(runs[0])}

    def criteria(self) -> list[tuple[int, str, typing.Callable[[], dict[str, typing.Any]]]]:
        return [
            (1, "sumset oracle equivalence", self.sumset_oracle),
            (2, "near-extremal example", self.near_extremal),
            (3, "extraction theorem check", self.extraction),
            (4, "removal duality", self.duality),
            (5, "Freiman embedding", self.freiman),
            (6, "midpoint gamma exactness", self.midpoint_exactness),
            (7, "lattice volume bounds", self.lattice_volume),
            (8, "midpoint density", self.midpoint_density),
            (9, "geometry cross-validation", self.geometry),
            (10, "counterexample frontier", self.frontier),
            (11, "determinism", self.determinism),
        ]


def _ratios_csv(rows: list[dict[str, typing.Any]]) -> str:
    header = ["criterion", "quantity", "d", "M", "eta", "std_error", "value", "reference", "ratio"]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, header, restval="", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def suite_verify(
    level: Level = "quick",
    out: str | Path | None = None,
    golden: str | Path | None = None,
    seed: int = 0,
    budget: Budget | None = None,
    workers: int | None = None,
    only: typing.Collection[int] | None = None,
) -> SuiteSummary:
    if level not in ("quick", "full"):
        raise LabError(f"Unknown suite level '{level}'")
    with contextlib.ExitStack() as stack:
        directory = Path(out) if out is not None else Path(stack.enter_context(tempfile.TemporaryDirectory()))
        bundle = Bundle(directory)
        suite = _Suite(level, directory, Path(golden) if golden else None, seed, budget, workers)
        results = list[CriterionResult]()
        for number, name, run in suite.criteria():
            if only and number not in only:
                continue
            started = time.perf_counter()
            try:
                details, error = run(), None
            except (LabError, AssertionError) as e:
                details, error = {"stage": getattr(e, "stage", None)}, f"{type(e).__name__}: {e}"
                logger.error("criterion %d (%s) failed: %s", number, name, error)
            seconds = round(time.perf_counter() - started, 3)
            results.append(CriterionResult(number, name, error is None, seconds, details, error))
            logger.info("criterion %d (%s): %s in %.1fs", number, name, "pass" if error is None else "FAIL", seconds)
        summary = SuiteSummary(level, results)
        bundle.write_text("ratios.csv", _ratios_csv(suite.ratios))
        bundle.write_json("suite.json", summary.as_dict())
    return summary
