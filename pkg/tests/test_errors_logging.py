import logging
import tempfile
import unittest
from pathlib import Path

from lattice_pimc.utils import errors
from lattice_pimc.utils.logging_cfg import run_log, setup_logging


class TestErrors(unittest.TestCase):

    def test_hierarchy(self):
        self.assertTrue(issubclass(errors.LatticeConfigError, errors.ParameterError))
        for cls in (
            errors.BesselDomainError, errors.OrderRangeError, errors.QuadratureError,
            errors.SamplerError, errors.StatisticsError, errors.ExperimentConfigError, errors.OutputError,
        ):
            with self.subTest(cls=cls.__name__):
                self.assertTrue(issubclass(cls, errors.LatticePimcError))

    def test_quadrature_message_carries_estimate(self):
        exc = errors.QuadratureError("no convergence", best_estimate=1.25, achieved_tolerance=1e-6)
        message = errors.human_friendly_message(exc)
        self.assertIn("1.25", message)
        self.assertIn("--quad-tol", message)

    def test_messages(self):
        self.assertIn("configuration", errors.human_friendly_message(errors.ExperimentConfigError("bad key")))
        self.assertIn("lattice", errors.human_friendly_message(errors.LatticeConfigError("odd")))
        self.assertIn("--walks", errors.human_friendly_message(errors.StatisticsError("1 block")))
        self.assertIn("Permission", errors.human_friendly_message(PermissionError()))


class TestLogging(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            handler.close()
            root.removeHandler(handler)
        self._tmp.cleanup()

    def test_setup_creates_log_file(self):
        log_file = self.tmp / "logs" / "run.log"
        setup_logging(log_file=log_file)
        logging.getLogger("lattice_pimc.test").info("hello")
        for handler in logging.getLogger().handlers:
            handler.flush()
        self.assertIn("hello", log_file.read_text())

    def test_run_log_is_detached_afterwards(self):
        path = self.tmp / "one.log"
        root = logging.getLogger()
        before = list(root.handlers)
        with run_log(path) as written:
            self.assertEqual(written, path)
            logging.getLogger("lattice_pimc.test").info("inside")
        logging.getLogger("lattice_pimc.test").info("outside")
        self.assertEqual(root.handlers, before)
        text = path.read_text()
        self.assertIn("inside", text)
        self.assertNotIn("outside", text)

    def test_run_log_without_path(self):
        with run_log(None) as written:
            self.assertIsNone(written)


if __name__ == "__main__":
    unittest.main()
