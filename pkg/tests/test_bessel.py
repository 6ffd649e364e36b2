"""
Tests for the scaled modified Bessel kernel.
"""
import math
import unittest

import numpy as np

from lattice_pimc.numerics import bessel
from lattice_pimc.utils.errors import BesselDomainError, OrderRangeError
from tests.oracles import bessel_scaled_series


class TestBuildTable(unittest.TestCase):

    def test_zero_argument(self):
        table = bessel.build_table(0.0, 5)
        np.testing.assert_array_equal(table.scaled_values, [1.0, 0, 0, 0, 0, 0])

    def test_known_values(self):
        table = bessel.build_table(1.0, 4)
        self.assertAlmostEqual(table.scaled(0) * math.e, 1.2660658777520082, places=13)
        table = bessel.build_table(2.0, 4)
        self.assertAlmostEqual(table.scaled(1) / table.scaled(0), 0.697775, places=5)

    def test_matches_power_series(self):
        for z in (1e-6, 0.01, 0.3, 1.0, 2.5, 7.0, 15.0, 40.0):
            table = bessel.build_table(z, 64)
            for n in (0, 1, 2, 5, 10, 20, 40, 64):
                with self.subTest(z=z, n=n):
                    expected = bessel_scaled_series(n, z)
                    if expected < 1e-290:
                        continue
                    self.assertLess(abs(table.scaled(n) - expected) / expected, 1e-12)

    def test_matches_scipy(self):
        try:
            from scipy.special import ive
        except ImportError:
            self.skipTest("scipy not installed")
        for z in (0.05, 3.0, 25.0, 200.0):
            table = bessel.build_table(z, 30)
            np.testing.assert_allclose(table.scaled_values, ive(np.arange(31), z), rtol=1e-10, atol=1e-300)

    def test_sum_identity(self):
        for z in (0.1, 1.0, 5.0, 10.0):
            with self.subTest(z=z):
                s = bessel.step_cutoff(z)
                values = bessel.build_table(z, s).scaled_values
                self.assertLess(abs(values[0] + 2.0 * values[1:].sum() - 1.0), 1e-12)

    def test_monotone_and_positive(self):
        values = bessel.build_table(3.0, 30).scaled_values
        self.assertGreater(values[0], 0.0)
        self.assertTrue(np.all(np.diff(values) < 0))

    def test_recurrence_consistency(self):
        z = 4.0
        table = bessel.build_table(z, 20)
        v = table.scaled_values
        for n in range(1, 19):
            with self.subTest(n=n):
                lhs = v[n - 1] - v[n + 1]
                rhs = 2.0 * n / z * v[n]
                self.assertLess(abs(lhs - rhs) / abs(rhs), 1e-10)

    def test_vectorized_tables_match_single(self):
        zs = [0.0, 0.5, 12.0]
        tables = bessel.build_tables(zs, 8)
        for i, z in enumerate(zs):
            np.testing.assert_allclose(tables[i], bessel.build_table(z, 8).scaled_values, rtol=1e-13)

    def test_domain_errors(self):
        for z in (-1.0, float("nan"), float("inf")):
            with self.subTest(z=z):
                with self.assertRaises(BesselDomainError):
                    bessel.build_table(z, 4)

    def test_order_too_small(self):
        with self.assertRaises(OrderRangeError):
            bessel.build_table(1.0, 1)


class TestRatios(unittest.TestCase):

    def setUp(self):
        self.table2 = bessel.build_table(2.0, 10)

    def test_ratio_identities(self):
        self.assertEqual(bessel.ratio(0, 0, self.table2), 1.0)
        self.assertEqual(bessel.ratio(-3, 3, self.table2), 1.0)
        self.assertEqual(bessel.ratio(-4, 1, self.table2), bessel.ratio(4, 1, self.table2))

    def test_ratio_large_argument(self):
        table = bessel.build_table(20.0, 4)
        expected = bessel_scaled_series(1, 20.0) / bessel_scaled_series(0, 20.0)
        self.assertAlmostEqual(bessel.ratio(1, 0, table), expected, places=12)
        self.assertAlmostEqual(bessel.ratio(1, 0, table), 0.9747, places=3)

    def test_ratio_out_of_range(self):
        with self.assertRaises(OrderRangeError):
            bessel.ratio(11, 0, self.table2)

    def test_dlog1(self):
        i0, i1, i2 = (bessel_scaled_series(n, 2.0) for n in range(3))
        self.assertAlmostEqual(bessel.dlog1(0, self.table2), i1 / i0, places=12)
        self.assertAlmostEqual(bessel.dlog1(1, self.table2), (i0 + i2) / (2 * i1), places=12)
        self.assertEqual(bessel.dlog1(0, bessel.build_table(0.0, 4)), 0.0)

    def test_dlog2(self):
        i0, i2 = bessel_scaled_series(0, 2.0), bessel_scaled_series(2, 2.0)
        self.assertAlmostEqual(bessel.dlog2(0, self.table2), (i0 + i2) / (2 * i0), places=12)
        self.assertAlmostEqual(bessel.dlog2(0, self.table2), 0.6511, places=3)
        self.assertAlmostEqual(bessel.dlog2(0, bessel.build_table(1e-9, 4)), 0.5, places=8)
        v = self.table2.scaled_values
        expected = (v[0] + 2 * v[2] + v[4]) / (4 * v[2])
        self.assertAlmostEqual(bessel.dlog2(2, self.table2), expected, places=14)

    def test_vector_orders(self):
        orders = np.array([0, -1, 2, -3])
        d1 = bessel.dlog1(orders, self.table2)
        self.assertEqual(d1.shape, (4,))
        self.assertAlmostEqual(d1[1], bessel.dlog1(1, self.table2), places=15)

    def test_log_value(self):
        table = bessel.build_table(3.0, 6)
        self.assertAlmostEqual(bessel.log_value(2, table), math.log(bessel_scaled_series(2, 3.0)) + 3.0, places=12)
        self.assertEqual(bessel.log_value(3, bessel.build_table(0.0, 4)), -math.inf)


class TestStepCutoff(unittest.TestCase):

    def test_small_arguments(self):
        for z in (0.0, 0.01, 0.5, 1.0):
            with self.subTest(z=z):
                s = bessel.step_cutoff(z)
                self.assertGreaterEqual(s, 2)
                self.assertLessEqual(s, 12)

    def test_tail_below_tolerance(self):
        for z in (0.02, 0.2, 2.0, 8.0):
            with self.subTest(z=z):
                s = bessel.step_cutoff(z)
                values = bessel.build_table(z, s + 60).scaled_values
                self.assertLess(2.0 * values[s + 1:].sum(), 1e-12)
                if s > 2:
                    self.assertGreaterEqual(2.0 * values[s:].sum(), 1e-12)

    def test_cached_table_is_reused(self):
        self.assertIs(bessel.cached_table(0.25, 8), bessel.cached_table(0.25, 8))


if __name__ == "__main__":
    unittest.main()
