import json
import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

from bsglab import CounterexampleSpec, GoldenMismatch, pipeline_counterexample, suite_verify
from bsglab.cli import build_parser, main
from bsglab.pipeline import MANIFEST_NAME, Bundle, check_golden, default_eps_grid, file_digest, reference_epsilon

from . import base


class GoldenTest(base.LabTestCase):

    def setUp(self) -> None:
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.path = Path(self._tmp.name) / "golden.json"

    def tearDown(self) -> None:
        self._tmp.cleanup()
        return super().tearDown()

    def test_written_then_checked(self):
        self.assertTrue(check_golden(self.path, {"a": 1, "b": "x"}))
        self.assertFalse(check_golden(self.path, {"a": 1}))
        self.assertTrue(check_golden(self.path, {"c": [1, 2]}))
        self.assertEqual(json.loads(self.path.read_text()), {"a": 1, "b": "x", "c": [1, 2]})

    def test_mismatch(self):
        check_golden(self.path, {"a": 1})
        with self.assertRaises(GoldenMismatch) as ctx:
            check_golden(self.path, {"a": 2})
        self.assertEqual(ctx.exception.criterion, "a")
        self.assertEqual(ctx.exception.expected, 1)
        self.assertEqual(ctx.exception.actual, 2)

    def test_corrupt_file(self):
        self.path.write_text("{not json")
        with self.assertRaises(GoldenMismatch):
            check_golden(self.path, {"a": 1})


class BundleTest(base.LabTestCase):

    def test_digests(self):
        with tempfile.TemporaryDirectory() as tmp:
            bundle = Bundle(Path(tmp) / "out")
            path = bundle.write_json("x.json", {"b": 1, "a": [1, 2]})
            self.assertEqual(bundle.outputs["x.json"], file_digest(path))
            manifest = bundle.manifest("test", {"k": 1}, 0.0, seed=3)
            self.assertEqual(manifest.outputs, {"x.json": file_digest(path)})
            stored = json.loads((Path(tmp) / "out" / MANIFEST_NAME).read_text())
            self.assertEqual(stored["seed"], 3)
            self.assertEqual(stored["command"], "test")


class CounterexamplePipelineTest(base.LabTestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls._tmp = tempfile.TemporaryDirectory()
        cls.root = Path(cls._tmp.name)
        cls.golden = cls.root / "golden.json"
        cls.runs = [
            pipeline_counterexample(cls.spec, cls.root / "first", golden=cls.golden, budget=cls.budget),
            pipeline_counterexample(cls.spec, cls.root / "second", budget=cls.budget),
        ]

    @classmethod
    def tearDownClass(cls) -> None:
        cls._tmp.cleanup()

    spec = CounterexampleSpec.make(Fraction(1, 4), 2, 10)

    def test_bundle(self):
        manifest = self.runs[0]
        for name in (
            "A.json",
            "A0.json",
            "gamma.json",
            "counterexample.json",
            "extraction.json",
            "properties.json",
            "frontier.csv",
            "frontier_A0.csv",
            "missing_sums.json",
        ):
            self.assertIn(name, manifest.outputs)
            self.assertEqual(manifest.outputs[name], file_digest(self.root / "first" / name))
        self.assertTrue((self.root / "first" / MANIFEST_NAME).exists())
        self.assertEqual(manifest.params["lambda"], "1/4")
        self.assertEqual(manifest.params["eps_grid"], [str(e) for e in default_eps_grid(self.spec)])

    def test_eps_grid(self):
        spec = CounterexampleSpec.make(Fraction(1, 4), 3, 30)
        grid = [Fraction(1, 432), Fraction(1, 216), Fraction(1, 108), Fraction(1, 54), Fraction(1, 27)]
        self.assertEqual(reference_epsilon(spec), Fraction(1, 108))
        self.assertEqual(default_eps_grid(spec), grid)

    def test_deterministic(self):
        self.assertEqual(self.runs[0].outputs, self.runs[1].outputs)

    def test_report(self):
        report = json.loads((self.root / "first" / "counterexample.json").read_text())
        self.assertLessEqual(report["restricted_size"], report["missing_sum_floor"])
        self.assertEqual(report["spec"]["L"], 40)
        missing = json.loads((self.root / "first" / "missing_sums.json").read_text())
        self.assertEqual(missing["total"], missing["U1"] + missing["U2"] + missing["U3"])
        frontier = (self.root / "first" / "frontier_A0.csv").read_text().splitlines()
        self.assertEqual(frontier[0], "epsilon,delta,margin,strategy,certified")
        self.assertEqual(len(frontier), 6)
        self.assertNotIn("skipped", "\n".join(frontier[1:]))
        self.assertEqual(missing["A_prime_source"], "A0")
        self.assertGreater(missing["total_vs_0.4_A0"], 0)
        self.assertLess(missing["size_A_prime"], report["size_A"])
        properties = json.loads((self.root / "first" / "properties.json").read_text())
        self.assertIn("neighbour_slabs", properties)
        self.assertTrue(properties["properties"]["interval_within_bound"])

    def test_golden(self):
        recorded = json.loads(self.golden.read_text())
        self.assertEqual(recorded["digest:A.json"], self.runs[0].outputs["A.json"])
        corrupted = self.root / "corrupted.json"
        corrupted.write_text(json.dumps({**recorded, "digest:A0.json": "sha256:0"}))
        code = main(
            [
                "pipeline",
                "counterexample",
                "--lambda",
                "1/4",
                "--d",
                "2",
                "--M",
                "10",
                "--bundle",
                str(self.root / "third"),
                "--golden",
                str(corrupted),
                "--out",
                str(self.root / "third.json"),
                "-q",
            ]
        )
        self.assertEqual(code, 1)


class CommandLineTest(base.LabTestCase):

    def setUp(self) -> None:
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)
        self.a = self.root / "A.json"
        self.a.write_text(json.dumps({"type": "int_set", "elements": list(range(1, 11))}))

    def tearDown(self) -> None:
        self._tmp.cleanup()
        return super().tearDown()

    def test_sumset(self):
        out = self.root / "sum.json"
        code = main(["sets", "sumset", "--a", str(self.a), "--b", str(self.a), "--out", str(out), "--manifest", "-q"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out.read_text()), {"type": "int_set", "elements": list(range(2, 21))})
        manifest = json.loads(Path(f"{out}.manifest.json").read_text())
        self.assertEqual(manifest["command"], "sets sumset")
        self.assertEqual(manifest["inputs"], {str(self.a): file_digest(self.a)})

    def test_json_is_default(self):
        parser = build_parser()
        self.assertIsNone(parser.parse_args(["sets", "sumset", "--a", "x", "--b", "x"]).format)
        self.assertIsNone(parser.parse_args(["search", "frontier", "--a", "x", "--eps-grid", "1/10"]).format)
        extracted = self.root / "extract.json"
        code = main(["bsg", "extract", "--a", str(self.a), "--b", str(self.a), "--out", str(extracted), "-q"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(extracted.read_text())["A_prime"]["elements"], list(range(1, 11)))
        table = self.root / "frontier.csv"
        code = main(["search", "frontier", "--a", str(self.a), "--eps-grid", "1/10,1/5", "--out", str(table), "-q"])
        self.assertEqual(code, 0)
        lines = table.read_text().splitlines()
        self.assertEqual(lines[0], "epsilon,delta,margin,strategy,certified")
        self.assertEqual(len(lines), 3)
        rows = self.root / "frontier.json"
        args = ["search", "frontier", "--a", str(self.a), "--eps-grid", "1/10", "--format", "json"]
        code = main([*args, "--out", str(rows), "-q"])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(rows.read_text())[0]["strategy"], "greedy")

    def test_ap_cover(self):
        sparse = self.root / "sparse.json"
        sparse.write_text(json.dumps({"type": "int_set", "elements": [2, 5, 8, 14]}))
        out = self.root / "cover.json"
        self.assertEqual(main(["sets", "ap-cover", "--a", str(sparse), "--out", str(out), "-q"]), 0)
        self.assertEqual(json.loads(out.read_text()), {"start": 2, "diff": 3, "length": 5})

    def test_bad_input(self):
        gamma = self.root / "gamma.json"
        gamma.write_text(json.dumps({"type": "pair_complement", "removed": []}))
        self.assertEqual(main(["sets", "sumset", "--a", str(gamma), "--b", str(self.a), "-q"]), 2)

    def test_hypothesis(self):
        pair = self.root / "pair.json"
        pair.write_text(json.dumps({"type": "int_set", "elements": [1, 2]}))
        gamma = self.root / "gamma.json"
        gamma.write_text(json.dumps({"type": "pair_complement", "removed": [[0, 0]]}))
        code = main(["bsg", "extract", "--a", str(pair), "--b", str(pair), "--gamma", str(gamma), "-q"])
        self.assertEqual(code, 2)

    def test_manifest_needs_out(self):
        self.assertEqual(main(["geom", "ball-volume", "--d", "3", "--manifest", "-q"]), 2)

    def test_budget(self):
        code = main(["annulus", "build", "--d", "3", "--M", "40", "--budget", "max_points=100", "-q"])
        self.assertEqual(code, 2)

    def test_seed_required(self):
        with self.assertRaises(SystemExit):
            main(["geom", "mc-T", "--d", "2", "--eta", "0.25", "-q"])


class SuiteTest(base.LabTestCase):

    def test_quick_subset(self):
        with tempfile.TemporaryDirectory() as tmp:
            summary = suite_verify("quick", tmp, seed=self.seed, budget=self.budget, only=[2, 5])
            self.assertTrue(summary.passed, summary.failed)
            self.assertEqual([r.number for r in summary.results], [2, 5])
            stored = json.loads((Path(tmp) / "suite.json").read_text())
            self.assertTrue(stored["passed"])
            self.assertTrue((Path(tmp) / "ratios.csv").exists())


if __name__ == "__main__":
    unittest.main()
