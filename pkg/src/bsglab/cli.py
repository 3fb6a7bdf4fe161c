import argparse
import csv
import io
import json
import logging
import sys
import time
import typing
from fractions import Fraction
from pathlib import Path

from . import annulus, bsg, geometry, pipeline, search, sets
from .config import VERSION, get_budget
from .errors import GoldenMismatch, InvalidParameter, LabError, TheoremViolation

logger = logging.getLogger(__name__)

# arguments naming input files; their digests go into the manifest
INPUT_ARGS = ("a", "b", "gamma", "instance")


# parsing helpers


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: '{text}'") from None


def _eps_grid(text: str) -> list[Fraction]:
    grid = [_fraction(part.strip()) for part in text.split(",") if part.strip()]
    if not grid:
        raise argparse.ArgumentTypeError("epsilon grid cannot be empty")
    return grid


def _criteria(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of criterion numbers: '{text}'") from None


def _load_set(path: str) -> sets.AnySet:
    obj = sets.load_json(path)
    if isinstance(obj, sets.PairConstraint):
        raise InvalidParameter(f"{path} holds a pair constraint, not a set")
    return obj


def _load_int_set(path: str) -> sets.IntSet:
    obj = _load_set(path)
    if not isinstance(obj, sets.IntSet):
        raise InvalidParameter(f"{path} holds a lattice set where an integer set is expected")
    return obj


def _load_lattice(path: str) -> sets.LatticeSet:
    obj = _load_set(path)
    if not isinstance(obj, sets.LatticeSet):
        raise InvalidParameter(f"{path} holds an integer set where a lattice set is expected")
    return obj


def _load_gamma(path: str | None, a: sets.AnySet, b: sets.AnySet) -> sets.PairConstraint:
    if path is None:
        return sets.PairConstraint.full(a, b)
    return sets.load_json(path, a, b)


def _load_instance(path: str) -> bsg.RemovalInstance:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        parts = [sets.from_json(data[name]) for name in ("A", "B", "C")]
    except KeyError as e:
        raise InvalidParameter(f"{path}: removal instance is missing part {e}") from None
    inst = bsg.RemovalInstance(*parts, bsg.Group.parse(data.get("group", "integers")))
    inst.validate()
    return inst


# output


def _csv_text(payload: typing.Any) -> str:
    rows = payload if isinstance(payload, list) else [payload]
    flat = [{k: v for k, v in row.items() if not isinstance(v, (dict, list))} for row in rows]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, list(flat[0]) if flat else [], lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return buffer.getvalue()


def _render(payload: typing.Any, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    return _csv_text(payload) if fmt == "csv" else sets.dumps(payload)


def _emit(args: argparse.Namespace, payload: typing.Any, started: float):
    text = _render(payload, args.format or "json")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.manifest:
        if not args.out:
            raise InvalidParameter("--manifest needs --out")
        inputs = {
            getattr(args, name): pipeline.file_digest(getattr(args, name))
            for name in INPUT_ARGS
            if getattr(args, name, None)
        }
        params = {k: str(v) if isinstance(v, Fraction) else v for k, v in vars(args).items() if k != "handler"}
        params["eps_grid"] = [str(e) for e in params.get("eps_grid") or []] or None
        manifest = pipeline.RunManifest(
            command=f"{args.module} {args.op}",
            params={k: v for k, v in params.items() if v is not None},
            seed=getattr(args, "seed", None),
            version=VERSION,
            inputs=inputs,
            outputs={Path(args.out).name: pipeline.digest(text.encode("utf-8"))},
            wall_time=round(time.perf_counter() - started, 3),
        )
        manifest.write(Path(f"{args.out}.manifest.json"))


# handlers


def sets_sumset(args: argparse.Namespace):
    return sets.to_json(sets.sumset(_load_set(args.a), _load_set(args.b), args.budget))


def sets_restricted(args: argparse.Namespace):
    a, b = _load_set(args.a), _load_set(args.b)
    return sets.to_json(sets.restricted_sumset(a, b, _load_gamma(args.gamma, a, b), args.budget))


def sets_ap_cover(args: argparse.Namespace):
    cover = sets.minimal_ap_cover(_load_int_set(args.a))
    return cover._asdict()


def sets_embed(args: argparse.Namespace):
    a = _load_lattice(args.a)
    base = args.base if args.base is not None else 10 * max(a.box_radius, 1)
    return sets.to_json(sets.freiman_embed(a, base))


def sets_report(args: argparse.Namespace):
    a = _load_int_set(args.a)
    gamma = sets.load_json(args.gamma, a, a) if args.gamma else None
    report = sets.doubling_report(a, gamma, args.budget)
    return {**report.as_dict(), "three_term_progressions": sets.count_three_term_progressions(a, args.budget)}


def bsg_extract(args: argparse.Namespace):
    a, b = _load_int_set(args.a), _load_int_set(args.b)
    result = bsg.bsg_extract(a, b, _load_gamma(args.gamma, a, b), args.budget)
    return {**result.as_dict(), "A_prime": sets.to_json(result.A_prime), "B_prime": sets.to_json(result.B_prime)}


def bsg_dualize(args: argparse.Namespace):
    a, b = _load_int_set(args.a), _load_int_set(args.b)
    report = bsg.dualize(a, b, _load_gamma(args.gamma, a, b), args.mode, args.budget)
    return {**report.as_dict(), "C": sets.to_json(report.instance.C), "S": sets.to_json(report.exceptional)}


def bsg_solve_removal(args: argparse.Namespace):
    inst = _load_instance(args.instance)
    solution = bsg.solve_removal(inst, args.mode, args.budget)
    return {
        "group": str(inst.group),
        "solution_count": bsg.solution_count(inst, args.budget),
        "removed_count": solution.removed_count,
        "removed": [[part, value] for part, value in solution.removed],
        "mode": solution.mode,
        "certified": solution.certified,
        "A_prime": sets.to_json(solution.A_prime),
        "B_prime": sets.to_json(solution.B_prime),
        "C_prime": sets.to_json(solution.C_prime),
    }


def _annulus_spec(args: argparse.Namespace) -> annulus.AnnulusSpec:
    return annulus.AnnulusSpec.make(args.d, args.M, args.eta, args.trim)


def annulus_build(args: argparse.Namespace):
    lattice = annulus.build_annulus_set(_annulus_spec(args), args.budget, args.workers)
    return sets.to_json(lattice)


def annulus_gamma(args: argparse.Namespace):
    return sets.to_json(annulus.build_midpoint_gamma(_load_set(args.a), args.budget))


def annulus_project(args: argparse.Namespace):
    return sets.to_json(annulus.project_to_z(_load_lattice(args.a)))


def annulus_counterexample(args: argparse.Namespace):
    spec = annulus.CounterexampleSpec.make(args.lam, args.d, args.M, args.eta, args.trim, args.C_exp)
    ce = annulus.build_counterexample(spec, args.budget, args.workers)
    return ce.report


def annulus_verify(args: argparse.Namespace):
    a0 = _load_int_set(args.a)
    gamma0 = sets.load_json(args.gamma, a0, a0)
    return annulus.verify_properties(a0, gamma0, args.d, args.budget, args.box_radius).as_dict()


def geom_ball_volume(args: argparse.Namespace):
    return geometry.ball_volume(args.d).as_dict()


def geom_annulus_volume(args: argparse.Namespace):
    return geometry.annulus_volume(args.d, args.eta).as_dict()


def geom_mc_T(args: argparse.Namespace):
    return geometry.mc_volume_T(args.d, args.eta, args.samples, args.seed, args.chunk, args.workers).as_dict()


def geom_mc_Ry(args: argparse.Namespace):
    found = geometry.mc_volume_Ry(
        args.d, args.eta, args.t, args.samples, args.seed, args.floor, args.chunk, args.workers
    )
    return {
        **found.R.as_dict(),
        "R_minus": found.R_minus.as_dict(),
        "lower_bound": found.lower_bound,
        "floor": found.floor,
    }


def geom_check_lemma45(args: argparse.Namespace):
    check = geometry.check_intersection_lemma(args.d, args.eta, args.trials, args.seed, args.chunk, args.workers)
    return check.as_dict()


def geom_check_prop42(args: argparse.Namespace):
    report = geometry.mc_check_prop42(
        args.d,
        args.eta,
        geometry.Carve.parse(args.carve),
        args.samples,
        args.seed,
        args.mass_budget,
        args.witness_budget,
        args.chunk,
        args.workers,
    )
    return report.as_dict()


def geom_cap(args: argparse.Namespace):
    return geometry.cap_volume(args.d, args.h).as_dict()


def search_shrink(args: argparse.Namespace):
    cfg = search.SearchConfig(args.epsilon, args.strategy, args.steps, args.seed)
    result = search.shrink_search(_load_int_set(args.a), cfg, args.budget)
    return {**result.as_dict(), "A_prime": sets.to_json(result.A_prime)}


def search_frontier(args: argparse.Namespace):
    a = _load_int_set(args.a)
    gamma = _load_gamma(args.gamma, a, a)
    rows = search.frontier_probe(a, gamma, args.eps_grid, args.strategy, args.steps, args.budget)
    if args.format == "json":
        return [{name: search.format_cell(value) for name, value in zip(search.FRONTIER_HEADER, row)} for row in rows]
    return search.frontier_csv(rows)


def pipeline_counterexample(args: argparse.Namespace):
    spec = annulus.CounterexampleSpec.make(args.lam, args.d, args.M, args.eta, args.trim, args.C_exp)
    manifest = pipeline.pipeline_counterexample(
        spec, args.bundle, args.eps_grid, args.strategy, args.golden, args.budget, args.workers
    )
    return manifest.as_dict()


def suite_verify(args: argparse.Namespace):
    summary = pipeline.suite_verify(
        args.level, args.bundle, args.golden, args.seed, args.budget, args.workers, args.only
    )
    if not summary.passed:
        args.failed = summary.failed
    return summary.as_dict()


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="default: json (csv for search frontier)")
    common.add_argument("--budget", default="", help="budget overrides, e.g. max_points=200000,max_span=5e7")
    common.add_argument("--manifest", action="store_true", help="write <out>.manifest.json next to the output")
    common.add_argument("--workers", type=int, default=None, help="worker threads for parallel stages")
    common.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(prog="bsglab", description="Restricted sumsets and the almost-all BSG laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    modules = parser.add_subparsers(dest="module", required=True)

    def op(group, name: str, handler, text: str) -> argparse.ArgumentParser:
        sub = group.add_parser(name, parents=[common], help=text)
        sub.set_defaults(handler=handler)
        return sub

    def stochastic(sub: argparse.ArgumentParser, samples: int | None = 100_000):
        sub.add_argument("--seed", type=int, required=True, help="random seed (mandatory)")
        if samples is not None:
            sub.add_argument("--samples", type=int, default=samples)
        sub.add_argument("--chunk", type=int, default=geometry.DEFAULT_CHUNK)

    # sets
    group = modules.add_parser("sets", help="core set operations").add_subparsers(dest="op", required=True)
    sub = op(group, "sumset", sets_sumset, "A + B")
    sub.add_argument("--a", required=True)
    sub.add_argument("--b", required=True)
    sub = op(group, "restricted", sets_restricted, "A +_Gamma B")
    sub.add_argument("--a", required=True)
    sub.add_argument("--b", required=True)
    sub.add_argument("--gamma")
    sub = op(group, "ap-cover", sets_ap_cover, "smallest arithmetic progression containing A")
    sub.add_argument("--a", required=True)
    sub = op(group, "embed", sets_embed, "Freiman embedding of a lattice set into Z")
    sub.add_argument("--a", required=True)
    sub.add_argument("--base", type=int)
    sub = op(group, "report", sets_report, "doubling statistics")
    sub.add_argument("--a", required=True)
    sub.add_argument("--gamma")

    # bsg
    group = modules.add_parser("bsg", help="extraction and removal duality").add_subparsers(dest="op", required=True)
    sub = op(group, "extract", bsg_extract, "almost-all BSG extraction")
    for name in ("--a", "--b"):
        sub.add_argument(name, required=True)
    sub.add_argument("--gamma")
    sub = op(group, "dualize", bsg_dualize, "restricted sumset to removal instance and back")
    for name in ("--a", "--b"):
        sub.add_argument(name, required=True)
    sub.add_argument("--gamma")
    sub.add_argument("--mode", choices=("exhaustive", "greedy"), default="greedy")
    sub = op(group, "solve-removal", bsg_solve_removal, "destroy all solutions of a + b = c")
    sub.add_argument("--instance", required=True, help='JSON with "A", "B", "C" and optional "group"')
    sub.add_argument("--mode", choices=("exhaustive", "greedy"), default="greedy")

    # annulus
    group = modules.add_parser("annulus", help="discretized annulus construction").add_subparsers(
        dest="op", required=True
    )

    def annulus_args(sub: argparse.ArgumentParser):
        sub.add_argument("--d", type=int, required=True)
        sub.add_argument("--M", type=int, required=True)
        sub.add_argument("--eta", type=_fraction)
        sub.add_argument("--trim", type=_fraction)

    annulus_args(op(group, "build", annulus_build, "lattice points of the trimmed annulus"))
    sub = op(group, "gamma", annulus_gamma, "midpoint-excluding pair constraint")
    sub.add_argument("--a", required=True)
    sub = op(group, "project", annulus_project, "project a lattice set to Z")
    sub.add_argument("--a", required=True)
    sub = op(group, "counterexample", annulus_counterexample, "assemble the counterexample")
    annulus_args(sub)
    sub.add_argument("--lambda", dest="lam", type=_fraction, required=True)
    sub.add_argument("--C-exp", dest="C_exp", type=float, default=1.0)
    sub = op(group, "verify", annulus_verify, "properties of a projected set and its gamma")
    sub.add_argument("--a", required=True)
    sub.add_argument("--gamma", required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--box-radius", type=int, help="box radius of the projected lattice, for the interval bound")

    # geom
    group = modules.add_parser("geom", help="exact and Monte Carlo geometry").add_subparsers(dest="op", required=True)
    sub = op(group, "ball-volume", geom_ball_volume, "volume of the unit ball")
    sub.add_argument("--d", type=int, required=True)
    sub = op(group, "annulus-volume", geom_annulus_volume, "volume of the annulus")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--eta", type=float, required=True)
    sub = op(group, "mc-T", geom_mc_T, "Monte Carlo volume of the progression set T")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--eta", type=float, required=True)
    stochastic(sub)
    sub = op(group, "mc-Ry", geom_mc_Ry, "Monte Carlo volume of S n (y - S)")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--eta", type=float, required=True)
    sub.add_argument("--t", type=float, required=True)
    sub.add_argument("--floor", type=float, default=0.0)
    stochastic(sub)
    sub = op(group, "check-lemma45", geom_check_lemma45, "randomized intersection inequality check")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--eta", type=float, required=True)
    sub.add_argument("--trials", type=int, default=100_000)
    stochastic(sub, samples=None)
    sub = op(group, "check-prop42", geom_check_prop42, "sumset deficit of a carved annulus")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--eta", type=float, required=True)
    sub.add_argument("--carve", default="none", help="none, radial:<eps>, cap:<h> or slab:<w>")
    sub.add_argument("--mass-budget", type=float)
    sub.add_argument("--witness-budget", type=int, default=64)
    stochastic(sub)
    sub = op(group, "cap", geom_cap, "volume of a cap of height h")
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--h", type=float, required=True)

    # search
    group = modules.add_parser("search", help="adversarial subset search").add_subparsers(dest="op", required=True)
    sub = op(group, "shrink", search_shrink, "minimize |A'+A'| over large subsets")
    sub.add_argument("--a", required=True)
    sub.add_argument("--epsilon", type=_fraction, required=True)
    sub.add_argument("--strategy", choices=search.STRATEGIES, default="greedy")
    sub.add_argument("--steps", type=int, default=10_000)
    sub.add_argument("--seed", type=int, default=0)
    sub = op(group, "frontier", search_frontier, "margins over an epsilon grid")
    sub.add_argument("--a", required=True)
    sub.add_argument("--gamma")
    sub.add_argument("--eps-grid", type=_eps_grid, required=True)
    sub.add_argument("--strategy", choices=search.STRATEGIES, default="greedy")
    sub.add_argument("--steps", type=int, default=10_000)

    # pipeline
    group = modules.add_parser("pipeline", help="end-to-end constructions").add_subparsers(dest="op", required=True)
    sub = op(group, "counterexample", pipeline_counterexample, "build, verify and write the artifact bundle")
    annulus_args(sub)
    sub.add_argument("--lambda", dest="lam", type=_fraction, required=True)
    sub.add_argument("--C-exp", dest="C_exp", type=float, default=1.0)
    sub.add_argument("--bundle", required=True, help="output directory of the bundle")
    sub.add_argument("--eps-grid", type=_eps_grid)
    sub.add_argument("--strategy", choices=search.STRATEGIES, default="greedy")
    sub.add_argument("--golden", help="golden digests file; written when missing")

    # suite
    group = modules.add_parser("suite", help="acceptance suite").add_subparsers(dest="op", required=True)
    sub = op(group, "verify", suite_verify, "run the acceptance criteria")
    sub.add_argument("--level", choices=("quick", "full"), default="quick")
    sub.add_argument("--bundle", help="directory for suite artifacts (default: temporary)")
    sub.add_argument("--golden")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--only", type=_criteria, help="comma-separated criterion numbers")
    return parser


def main(argv: typing.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="[%(levelname)s] %(name)s: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        args.budget = get_budget(args.budget)
        _emit(args, args.handler(args), started)
        if getattr(args, "failed", None):
            print(f"bsglab: suite failed: {', '.join(args.failed)}", file=sys.stderr)
            return 1
    except (TheoremViolation, GoldenMismatch) as e:
        stage = getattr(e, "stage", None)
        print(f"bsglab: {f'[{stage}] ' if stage else ''}{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except LabError as e:
        stage = getattr(e, "stage", None)
        print(f"bsglab: {f'[{stage}] ' if stage else ''}{type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0
