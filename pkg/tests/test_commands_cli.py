import logging
import math
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from lattice_pimc import cli
from lattice_pimc.core import exact_free, exact_striped
from lattice_pimc.core.settings import config_from_mapping
from lattice_pimc.experiments import commands
from lattice_pimc.experiments.output import format_value, read_csv, write_csv
from lattice_pimc.models import ThermoParams
from lattice_pimc.utils.errors import ExperimentConfigError, OutputError

SLOW = os.environ.get("LATTICE_PIMC_SLOW_TESTS") == "1"


class _TempDirTestCase(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        env = mock.patch.dict(os.environ, {"LATTICE_PIMC_LOG_DIR": str(self.tmp / "logs")})
        env.start()
        self.addCleanup(env.stop)

    def tearDown(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            handler.close()
            root.removeHandler(handler)
        self._tmp.cleanup()


def _pimc_config(out, **overrides):
    mapping = {
        "mode": "pimc",
        "betas": [1.0],
        "p": 8,
        "walks": 2000,
        "burn_in": 50,
        "pattern": "striped",
        "lattice_size": 4,
        "epsilon": 2.0,
        "seed": 5,
        "n_max": 2,
        "out": str(out),
    }
    mapping.update(overrides)
    return config_from_mapping(mapping).validate()


class TestOutput(_TempDirTestCase):

    def test_format_value(self):
        self.assertEqual(format_value(0.1), "0.1")
        self.assertEqual(format_value(1.0 / 3.0), "0.333333333333")
        self.assertEqual(format_value(math.nan), "nan")
        self.assertEqual(format_value(-math.inf), "-inf")
        self.assertEqual(format_value(True), "1")
        self.assertEqual(format_value(12), "12")
        self.assertEqual(format_value("ok"), "ok")

    def test_row_width_is_checked(self):
        with self.assertRaises(OutputError):
            write_csv(self.tmp / "x.csv", ["a", "b"], [[1.0]])


class TestExactCommands(_TempDirTestCase):

    def test_exact_free_table(self):
        out = self.tmp / "free.csv"
        commands.cmd_exact_free([0.0, 1.0], n_max=3, out=out)
        rows = read_csv(out)
        self.assertEqual(len(rows), 2)
        self.assertEqual(list(rows[0])[:4], ["beta", "Z_per_site", "E_mean", "E_fluct"])
        self.assertEqual(float(rows[0]["E_mean"]), 2.0)
        self.assertEqual(float(rows[0]["E_fluct"]), 2.0)
        self.assertEqual(float(rows[0]["G1_3"]), 0.0)
        expected = exact_free.mean_energy(ThermoParams(beta=1.0))
        self.assertAlmostEqual(float(rows[1]["E_mean"]), expected, places=10)

    def test_exact_striped_table(self):
        out = self.tmp / "striped.csv"
        results = commands.cmd_exact_striped([0.1, 1.0], epsilon=10.0, n_max=2, out=out)
        self.assertEqual(len(results), 2)
        rows = read_csv(out)
        self.assertEqual(len(rows), 3)
        self.assertEqual(rows[0]["status"], "ok")
        ground = rows[-1]
        self.assertEqual(ground["beta"], "inf")
        self.assertEqual(ground["status"], "ground_state")
        self.assertAlmostEqual(float(ground["E_mean"]), exact_striped.ground_state_energy(12.0, 2.0), places=10)
        self.assertAlmostEqual(float(ground["V_mean"]), exact_striped.ground_state_potential(10.0), places=10)
        self.assertAlmostEqual(float(rows[1]["G2_0"]) + float(rows[1]["G2_1"]), 1.0, places=10)


class TestMonteCarloCommands(_TempDirTestCase):

    def test_pimc_is_reproducible(self):
        first, second = self.tmp / "a.csv", self.tmp / "b.csv"
        commands.cmd_pimc(_pimc_config(first))
        commands.cmd_pimc(_pimc_config(second))
        self.assertEqual(first.read_bytes(), second.read_bytes())
        log_text = first.with_suffix(".log").read_text()
        self.assertIn("seed=5", log_text)
        rows = read_csv(first)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["status"], "ok")
        self.assertEqual(int(rows[0]["n_samples"]), 2000)
        acceptance = float(rows[0]["acceptance"])
        self.assertGreater(acceptance, 0.0)
        self.assertLessEqual(acceptance, 1.0)

    def test_worker_count_does_not_change_output(self):
        serial, parallel = self.tmp / "serial.csv", self.tmp / "parallel.csv"
        commands.cmd_pimc(_pimc_config(serial, betas=[0.5, 1.0], chains=2, workers=1))
        commands.cmd_pimc(_pimc_config(parallel, betas=[0.5, 1.0], chains=2, workers=2))
        self.assertEqual(serial.read_bytes(), parallel.read_bytes())
        self.assertEqual(int(read_csv(serial)[0]["n_samples"]), 4000)

    def test_free_pimc(self):
        out = self.tmp / "free.csv"
        merged = commands.cmd_pimc(_pimc_config(out, pattern="free", walks=20_000, p=16))
        beta, stats, status = merged[0]
        self.assertEqual(status, "ok")
        self.assertEqual(stats.acceptance_rate, 1.0)
        exact = exact_free.mean_energy(ThermoParams(beta=beta))
        self.assertLess(abs(stats.mean("energy") - exact), 5.0 * stats.stderr("energy"))

    def test_striped_infinite_temperature(self):
        out = self.tmp / "hot.csv"
        merged = commands.cmd_pimc(_pimc_config(out, betas=[0.0], epsilon=10.0, walks=20_000))
        _, stats, status = merged[0]
        self.assertEqual(status, "ok")
        self.assertEqual(stats.acceptance_rate, 1.0)
        self.assertGreater(stats.stderr("v"), 0.0)
        self.assertLess(abs(stats.mean("v") - 5.0), 4.0 * stats.stderr("v"))
        self.assertEqual(float(read_csv(out)[0]["acceptance"]), 1.0)

    def test_compare_striped_high_temperature(self):
        out = self.tmp / "striped.csv"
        cfg = _pimc_config(out, mode="compare", epsilon=10.0, betas=[0.1], p=20, walks=20_000, burn_in=None)
        rows, _ = commands.cmd_compare(cfg)
        potential = next(r for r in rows if r.observable == "V_mean")
        self.assertAlmostEqual(potential.analytic, 2.7031, places=3)
        self.assertLess(potential.abs_deviation, 5.0 * potential.mc_stderr + 5e-3)

    def test_too_few_samples_marks_row(self):
        out = self.tmp / "short.csv"
        merged = commands.cmd_pimc(_pimc_config(out, walks=60))
        self.assertIsNone(merged[0][1])
        self.assertTrue(read_csv(out)[0]["status"].startswith("StatisticsError"))

    def test_compare_free(self):
        out = self.tmp / "compare.csv"
        cfg = _pimc_config(out, mode="compare", pattern="free", betas=[0.1], walks=50_000)
        rows, passed = commands.cmd_compare(cfg)
        self.assertIsInstance(passed, bool)
        energy = next(r for r in rows if r.observable == "E_mean")
        self.assertLess(energy.abs_deviation, 6.0 * energy.mc_stderr + 1e-3)
        records = read_csv(out)
        self.assertEqual(len(records), len(rows))
        self.assertEqual(records[0]["observable"], "E_mean")

    def test_compare_needs_exact_solution(self):
        cfg = _pimc_config(
            self.tmp / "c.csv", mode="compare", pattern="explicit", occupancy="1,0,0"
        )
        with self.assertRaises(ExperimentConfigError):
            commands.cmd_compare(cfg)


@unittest.skipUnless(SLOW, "set LATTICE_PIMC_SLOW_TESTS=1")
class TestStripedAgreementFullSize(_TempDirTestCase):

    def test_potential_and_parity_correlation(self):
        cfg = config_from_mapping({
            "mode": "compare",
            "pattern": "striped",
            "epsilon": 10.0,
            "lattice_size": 100,
            "p": 100,
            "walks": 100_000,
            "segment_fraction": 0.2,
            "betas": [0.1, 0.5, 1.0, 10.0],
            "n_max": 10,
            "seed": 11,
            "workers": 4,
            "out": str(self.tmp / "full.csv"),
        }).validate()
        rows, _ = commands.cmd_compare(cfg)
        for row in rows:
            if row.observable == "V_mean":
                rel_tol = 0.01 if row.beta <= 1.0 else 0.07
                with self.subTest(observable=row.observable, beta=row.beta):
                    self.assertLess(row.abs_deviation, max(rel_tol * abs(row.analytic), 4.0 * row.mc_stderr))
            elif row.observable.startswith("G2_") and row.beta == 10.0:
                with self.subTest(observable=row.observable, beta=row.beta):
                    self.assertLess(row.abs_deviation, 0.05)


class TestCli(_TempDirTestCase):

    def test_exact_free(self):
        out = self.tmp / "free.csv"
        status = cli.main(["exact", "free", "--beta", "0,1", "--n-max", "2", "--out", str(out)])
        self.assertEqual(status, cli.EXIT_OK)
        rows = read_csv(out)
        self.assertEqual([r["beta"] for r in rows], ["0", "1"])
        self.assertIn("G1_2", rows[0])

    def test_exact_striped(self):
        out = self.tmp / "striped.csv"
        status = cli.main(["exact", "striped", "--beta", "1", "--n-max", "1", "--out", str(out)])
        self.assertEqual(status, cli.EXIT_OK)
        self.assertEqual(read_csv(out)[-1]["beta"], "inf")

    def test_config_file_and_flag_precedence(self):
        config_path = self.tmp / "run.cfg"
        config_path.write_text("P=12\nWALKS=500\nEPSILON=1.5\n")
        args = cli.build_parser().parse_args(["pimc", "--config", str(config_path), "--p", "6", "--global-fraction", "0.5"])
        cfg = cli.resolve_config(args)
        self.assertEqual(cfg.p, 6)
        self.assertEqual(cfg.schedule.n_samples, 500)
        self.assertEqual(cfg.lattice.epsilon, 1.5)
        self.assertEqual(cfg.mode, "pimc")
        self.assertEqual(cfg.schedule.global_fraction, 0.5)

    def test_default_betas(self):
        parser = cli.build_parser()
        free = cli.resolve_config(parser.parse_args(["pimc", "--pattern", "free"]))
        striped = cli.resolve_config(parser.parse_args(["exact", "striped"]))
        self.assertEqual(free.betas, (0.1, 0.5, 1.0, 2.0, 5.0, 10.0))
        self.assertEqual(striped.betas[-1], 100.0)

    def test_configuration_error_exit_code(self):
        status = cli.main(["pimc", "--lattice-size", "7", "--out", str(self.tmp / "x.csv")])
        self.assertEqual(status, cli.EXIT_ERROR)
        status = cli.main(["pimc", "--config", str(self.tmp / "missing.json")])
        self.assertEqual(status, cli.EXIT_ERROR)

    def test_failed_comparison_exit_code(self):
        with mock.patch.object(commands, "cmd_compare", return_value=([], False)):
            status = cli.main(["compare", "--pattern", "free", "--beta", "1", "--out", str(self.tmp / "c.csv")])
        self.assertEqual(status, cli.EXIT_COMPARE_FAILED)


if __name__ == "__main__":
    unittest.main()
