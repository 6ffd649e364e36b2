import math
import unittest

import numpy as np

from lattice_pimc.core import exact_free, exact_striped
from lattice_pimc.core.exact_striped import StripedBands
from lattice_pimc.core.lattice_model import make_striped
from lattice_pimc.models import ThermoParams
from lattice_pimc.numerics.quadrature import QuadratureSpec
from tests.oracles import bessel_scaled_series, ring_thermal

EPSILON = 10.0
A, B = 2.0 + EPSILON, 2.0


class TestBands(unittest.TestCase):

    def test_sum_and_product_rules(self):
        x = np.linspace(0.0, 2.0 * math.pi, 37)
        plus = exact_striped.band_energy(x, "+", A, B)
        minus = exact_striped.band_energy(x, "-", A, B)
        np.testing.assert_allclose(plus + minus, A + B, rtol=1e-14)
        np.testing.assert_allclose(plus * minus, A * B - 4.0 * np.cos(x) ** 2, rtol=1e-12, atol=1e-12)
        self.assertTrue(np.all(plus >= minus))

    def test_branch_names(self):
        self.assertEqual(exact_striped.band_energy(0.3, 1, A, B), exact_striped.band_energy(0.3, "upper", A, B))
        with self.assertRaises(ValueError):
            exact_striped.band_energy(0.3, "x", A, B)

    def test_ground_state_constants(self):
        self.assertAlmostEqual(exact_striped.ground_state_energy(A, B), 1.6148, delta=5e-4)
        self.assertAlmostEqual(exact_striped.ground_state_potential(EPSILON), 0.3577, delta=5e-4)
        self.assertEqual(exact_striped.ground_state_potential(0.0), 0.0)
        self.assertAlmostEqual(exact_striped.ground_state_energy(2.0, 2.0), 0.0, places=14)

    def test_ground_state_is_band_minimum(self):
        bands = StripedBands.for_epsilon(EPSILON)
        x = np.linspace(0.0, 2.0 * math.pi, 1001)
        self.assertAlmostEqual(float(bands.lower(x).min()), exact_striped.ground_state_energy(A, B), places=12)


class TestBlochAmplitudes(unittest.TestCase):

    def test_normalization(self):
        x = np.linspace(0.0, 2.0 * math.pi, 25)
        amp = exact_striped.bloch_amplitudes(x, EPSILON)
        np.testing.assert_allclose(amp.u1_plus_sq + amp.u2_plus_sq, 1.0, rtol=1e-14)
        np.testing.assert_allclose(amp.u1_minus_sq + amp.u2_minus_sq, 1.0, rtol=1e-14)
        np.testing.assert_allclose(amp.u1_plus_sq + amp.u1_minus_sq, 1.0, rtol=1e-14)
        np.testing.assert_allclose(amp.cross_plus, -amp.cross_minus)
        # |u1 u2| matches the product of the weights
        np.testing.assert_allclose(amp.cross_minus ** 2, amp.u1_minus_sq * amp.u2_minus_sq, atol=1e-14)

    def test_limits(self):
        amp = exact_striped.bloch_amplitudes(0.0, 0.0)
        self.assertAlmostEqual(amp.u1_plus_sq, 0.5, places=14)
        self.assertAlmostEqual(amp.cross_minus, 0.5, places=14)
        amp = exact_striped.bloch_amplitudes(0.5 * math.pi, EPSILON)
        self.assertAlmostEqual(amp.u1_plus_sq, 1.0, places=12)
        self.assertAlmostEqual(amp.u1_minus_sq, 0.0, places=12)

    def test_lower_band_prefers_empty_sites(self):
        amp = exact_striped.bloch_amplitudes(np.linspace(0, 3, 7), EPSILON)
        self.assertTrue(np.all(amp.u1_minus_sq <= 0.5))


class TestStripedThermodynamics(unittest.TestCase):

    def test_partition_function_limits(self):
        self.assertAlmostEqual(exact_striped.partition_per_site(0.0, A, B), 2.0, places=12)
        expected = 2.0 * bessel_scaled_series(0, 2.0)
        self.assertAlmostEqual(exact_striped.partition_per_site(1.0, 2.0, 2.0), expected, places=9)
        self.assertAlmostEqual(exact_striped.partition_per_site(1.0, 2.0, 2.0), 0.617, places=3)

    def test_log_partition_finite_at_large_beta(self):
        value = exact_striped.log_partition_per_site(2000.0, A, B)
        self.assertTrue(math.isfinite(value))
        # ln Z is dominated by -beta * E_g at low temperature
        self.assertAlmostEqual(value / 2000.0, -exact_striped.ground_state_energy(A, B), places=2)

    def test_reduces_to_free_particle(self):
        for beta in (0.1, 1.0, 5.0):
            with self.subTest(beta=beta):
                params = ThermoParams(beta=beta)
                self.assertAlmostEqual(
                    exact_striped.mean_energy(beta, 2.0, 2.0), exact_free.mean_energy(params), places=9
                )
                self.assertAlmostEqual(
                    exact_striped.energy_fluctuation(beta, 2.0, 2.0), exact_free.energy_fluctuation(params), places=9
                )

    def test_infinite_temperature(self):
        self.assertAlmostEqual(exact_striped.mean_energy(0.0, A, B), 7.0, places=10)
        self.assertAlmostEqual(exact_striped.mean_potential(0.0, EPSILON), 5.0, places=10)
        self.assertEqual(exact_striped.mean_potential(1.0, 0.0), 0.0)

    def test_low_temperature_tail(self):
        e_g = exact_striped.ground_state_energy(A, B)
        v_g = exact_striped.ground_state_potential(EPSILON)
        f_max = StripedBands(A, B).radical_max
        beta = 100.0
        self.assertAlmostEqual(exact_striped.mean_energy(beta, A, B), e_g + 0.5 / beta, delta=1e-3)
        self.assertAlmostEqual(
            exact_striped.mean_potential(beta, EPSILON), v_g - EPSILON ** 2 / (2.0 * beta * f_max ** 2), delta=1e-3
        )

    def test_low_temperature_saturation(self):
        v500 = exact_striped.mean_potential(500.0, EPSILON)
        v1000 = exact_striped.mean_potential(1000.0, EPSILON)
        self.assertLess(abs(v500 - v1000), 1e-3)
        self.assertLess(abs(v1000 - exact_striped.ground_state_potential(EPSILON)), 1e-3)

    def test_potential_bounds(self):
        for beta in (0.01, 0.1, 1.0, 10.0):
            with self.subTest(beta=beta):
                v = exact_striped.mean_potential(beta, EPSILON)
                self.assertGreaterEqual(v, 0.0)
                self.assertLessEqual(v, EPSILON / 2 + 1e-12)

    def test_derivative_consistency(self):
        h = 1e-4
        beta = 0.7
        dlogz = (
            exact_striped.log_partition_per_site(beta + h, A, B)
            - exact_striped.log_partition_per_site(beta - h, A, B)
        ) / (2 * h)
        self.assertAlmostEqual(-dlogz, exact_striped.mean_energy(beta, A, B), places=5)

    def test_nearly_degenerate_bands_use_breakpoints(self):
        bands = StripedBands(2.01, 2.0)
        self.assertEqual(bands.quadrature_spec(QuadratureSpec()).breakpoints, exact_striped.KINKS)
        self.assertEqual(StripedBands(A, B).quadrature_spec(QuadratureSpec()).breakpoints, ())
        energy = exact_striped.mean_energy(1.0, 2.01, 2.0)
        self.assertAlmostEqual(energy, exact_free.mean_energy(ThermoParams(beta=1.0)) + 0.005, delta=1e-3)


class TestStripedAgainstRing(unittest.TestCase):
    """A 200-site ring is indistinguishable from the infinite lattice at these temperatures."""

    SIZE = 200

    def setUp(self):
        self.occupancy = make_striped(self.SIZE, EPSILON).occupancy

    def test_energy_and_fluctuation(self):
        for beta in (0.5, 2.0, 5.0):
            with self.subTest(beta=beta):
                mean, fluct, _ = ring_thermal(self.occupancy, EPSILON, beta)
                self.assertAlmostEqual(exact_striped.mean_energy(beta, A, B), mean, places=7)
                self.assertAlmostEqual(exact_striped.energy_fluctuation(beta, A, B), fluct, places=7)

    def test_occupied_fraction(self):
        beta = 1.0
        _, _, rho = ring_thermal(self.occupancy, EPSILON, beta)
        occupied = float(np.sum(np.diag(rho)[1::2])) / self.SIZE
        self.assertAlmostEqual(exact_striped.occupied_fraction(beta, EPSILON), occupied, places=7)

    def test_density_matrix(self):
        beta = 1.0
        _, _, rho = ring_thermal(self.occupancy, EPSILON, beta)
        for j, jp in ((0, 0), (1, 1), (0, 1), (1, 2), (0, 3), (1, 5), (0, 4)):
            with self.subTest(j=j, jp=jp):
                self.assertAlmostEqual(
                    exact_striped.density_matrix_element(j, jp, beta, EPSILON), rho[j, jp], places=7
                )
        for n in range(6):
            with self.subTest(n=n):
                expected = 0.5 * (rho[0, n] + rho[1, 1 + n])
                self.assertAlmostEqual(exact_striped.g1_striped(n, beta, EPSILON), expected, places=7)


class TestStripedCorrelations(unittest.TestCase):

    def test_unit_cell_trace(self):
        for beta in (0.1, 1.0, 10.0):
            with self.subTest(beta=beta):
                rho00 = exact_striped.density_matrix_element(0, 0, beta, EPSILON)
                rho11 = exact_striped.density_matrix_element(1, 1, beta, EPSILON)
                self.assertAlmostEqual(0.5 * (rho00 + rho11), 1.0, places=10)

    def test_free_limit_matches_bessel_ratio(self):
        beta = 1.0
        for n in range(5):
            with self.subTest(n=n):
                expected = exact_free.g1_exact(n, ThermoParams(beta=beta))
                self.assertAlmostEqual(exact_striped.density_matrix_element(0, n, beta, 0.0), expected, places=9)
                self.assertAlmostEqual(exact_striped.density_matrix_element(1, 1 + n, beta, 0.0), expected, places=9)

    def test_g1_starts_at_one(self):
        self.assertAlmostEqual(exact_striped.g1_striped(0, 2.0, EPSILON), 1.0, places=10)

    def test_g2_parity(self):
        beta = 1.0
        occupied = exact_striped.occupied_fraction(beta, EPSILON)
        self.assertEqual(exact_striped.g2_striped(0, beta, EPSILON), occupied)
        self.assertEqual(exact_striped.g2_striped(4, beta, EPSILON), occupied)
        self.assertAlmostEqual(exact_striped.g2_striped(3, beta, EPSILON), 1.0 - occupied, places=14)

    def test_observable_bundle(self):
        obs = exact_striped.striped_observables(1.0, EPSILON, n_max=4)
        self.assertEqual(obs.g1.shape, (5,))
        self.assertEqual(obs.g2.shape, (5,))
        self.assertAlmostEqual(obs.g1[0], 1.0, places=10)
        self.assertAlmostEqual(obs.g1[3], exact_striped.g1_striped(3, 1.0, EPSILON), places=8)
        self.assertAlmostEqual(obs.mean_energy, exact_striped.mean_energy(1.0, A, B), places=12)
        self.assertAlmostEqual(obs.mean_potential, exact_striped.mean_potential(1.0, EPSILON), places=12)
        self.assertAlmostEqual(obs.z_per_site, exact_striped.partition_per_site(1.0, A, B), places=12)
        self.assertAlmostEqual(obs.g2[0] + obs.g2[1], 1.0, places=14)


if __name__ == "__main__":
    unittest.main()
