"""
Exact solution of the striped (alternating) lattice.

The two-site unit cell gives two Bloch bands
E_{+/-}(u) = (a + b)/2 +/- F(u)/2 with F(u) = sqrt((a - b)^2 + 16 cos^2 u),
where a = 2 + epsilon is the energy of an occupied site and b = 2 that of an
empty one. Thermal averages are ratios of integrals over u in [0, 2*pi].

Every Gibbs factor is scaled by e^{-(beta/2) F_max}, F_max = max_u F(u):

    ep(u) = exp((beta/2) (F - F_max))    lower band
    em(u) = exp(-(beta/2) (F + F_max))   upper band

The common factor cancels in every ratio and is restored in the partition
function, so beta up to the ground-state regime stays finite.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from lattice_pimc import config
from lattice_pimc.models import StripedObservables
from lattice_pimc.numerics.quadrature import QuadratureSpec, quadrature

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

EMPTY_SITE_ENERGY = 2.0
KINKS = (0.5 * math.pi, 1.5 * math.pi)


@dataclass(frozen=True, slots=True)
class StripedBands:
    """Two-band dispersion with sublattice energies a (occupied) and b (empty)."""
    a: float
    b: float

    @classmethod
    def for_epsilon(cls, epsilon: float) -> "StripedBands":
        return cls(a=EMPTY_SITE_ENERGY + epsilon, b=EMPTY_SITE_ENERGY)

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def radical_max(self) -> float:
        return math.sqrt((self.a - self.b) ** 2 + 16.0)

    def radical(self, x: ArrayLike) -> ArrayLike:
        """F(x) = sqrt((a - b)^2 + 16 cos^2 x)."""
        return np.sqrt((self.a - self.b) ** 2 + 16.0 * np.cos(x) ** 2)

    def energy(self, x: ArrayLike, branch: Union[str, int]) -> ArrayLike:
        return self.center + _branch_sign(branch) * 0.5 * self.radical(x)

    def lower(self, x: ArrayLike) -> ArrayLike:
        return self.energy(x, "-")

    def upper(self, x: ArrayLike) -> ArrayLike:
        return self.energy(x, "+")

    def quadrature_spec(self, quad: QuadratureSpec) -> QuadratureSpec:
        """Split at the |cos u| kinks when the gap is nearly closed."""
        if abs(self.a - self.b) < config.KINK_THRESHOLD and not quad.breakpoints:
            return dataclasses.replace(quad, breakpoints=KINKS)
        return quad

    def weights(self, u: np.ndarray, beta: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return F(u), ep(u) and em(u) on a grid."""
        f = self.radical(u)
        f_max = self.radical_max
        ep = np.exp(0.5 * beta * (f - f_max))
        em = np.exp(-0.5 * beta * (f + f_max))
        return f, ep, em


@dataclass(slots=True)
class BlochAmplitudes:
    """Sublattice weights of the upper (+) and lower (-) Bloch states at x."""
    u1_plus_sq: ArrayLike
    u1_minus_sq: ArrayLike
    u2_plus_sq: ArrayLike
    u2_minus_sq: ArrayLike
    cross_plus: ArrayLike
    cross_minus: ArrayLike


def _branch_sign(branch: Union[str, int]) -> float:
    if branch in ("+", 1, "plus", "upper"):
        return 1.0
    if branch in ("-", -1, "minus", "lower"):
        return -1.0
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def band_energy(x: ArrayLike, branch: Union[str, int], a: float, b: float) -> ArrayLike:
    """E_{+/-}(x) = (a + b)/2 +/- F(x)/2."""
    return StripedBands(a, b).energy(x, branch)


def ground_state_energy(a: float, b: float) -> float:
    """Bottom of the lower band, reached at cos^2 x = 1."""
    return 0.5 * (a + b) - 0.5 * math.sqrt((a - b) ** 2 + 16.0)


def ground_state_potential(epsilon: float) -> float:
    """epsilon * |u_1|^2 in the ground state, with a = 2 + epsilon and b = 2."""
    if epsilon == 0.0:
        return 0.0
    return 0.5 * epsilon * (1.0 - epsilon / math.sqrt(epsilon * epsilon + 16.0))


def bloch_amplitudes(x: ArrayLike, epsilon: float) -> BlochAmplitudes:
    """
    Sublattice weights of the Bloch eigenvectors.

    Sublattice 1 is the occupied one. With F = sqrt(epsilon^2 + 16 cos^2 x),
    |u1,+|^2 = (1 + epsilon/F)/2 and |u1,-|^2 = (1 - epsilon/F)/2. At
    cos x = 0 the upper state sits entirely on the occupied sublattice. The
    cross terms u1*u2 carry opposite signs on the two branches.
    """
    c = np.cos(x)
    f = np.sqrt(epsilon * epsilon + 16.0 * c * c)
    safe = np.where(f > 0.0, f, 1.0)
    r = np.where(f > 0.0, epsilon / safe, 0.0)
    cross = np.where(f > 0.0, 2.0 * c / safe, 0.0)
    u1_plus = 0.5 * (1.0 + r)
    u1_minus = 0.5 * (1.0 - r)

    def _out(v: np.ndarray) -> ArrayLike:
        return float(v) if np.ndim(v) == 0 else v

    return BlochAmplitudes(
        u1_plus_sq=_out(u1_plus),
        u1_minus_sq=_out(u1_minus),
        u2_plus_sq=_out(1.0 - u1_plus),
        u2_minus_sq=_out(1.0 - u1_minus),
        cross_plus=_out(-cross),
        cross_minus=_out(cross),
    )


def log_partition_per_site(
    beta: float, a: float, b: float, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """ln(Z/N) = -beta (a+b)/2 + (beta/2) F_max + ln((1/pi) int (ep + em)/2)."""
    bands = StripedBands(a, b)

    def integrand(u: np.ndarray) -> np.ndarray:
        _, ep, em = bands.weights(u, beta)
        return 0.5 * (ep + em)

    integral = quadrature(integrand, bands.quadrature_spec(quad))
    return -beta * bands.center + 0.5 * beta * bands.radical_max + math.log(integral / math.pi)


def partition_per_site(
    beta: float, a: float, b: float, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """Z/N = e^{-beta (a+b)/2} (1/pi) int_0^{2 pi} cosh((beta/2) F(u)) du."""
    return math.exp(log_partition_per_site(beta, a, b, quad))


def _energy_moments(
    beta: float, a: float, b: float, quad: QuadratureSpec
) -> Tuple[float, float, float]:
    """Return int(ep + em), int F (ep - em) and int F^2 (ep + em)."""
    bands = StripedBands(a, b)

    def integrand(u: np.ndarray) -> np.ndarray:
        f, ep, em = bands.weights(u, beta)
        return np.stack([ep + em, f * (ep - em), f * f * (ep + em)])

    norm, first, second = quadrature(integrand, bands.quadrature_spec(quad))
    return float(norm), float(first), float(second)


def mean_energy(beta: float, a: float, b: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """<H> = (a+b)/2 - (1/2) int F sinh((beta/2)F) / int cosh((beta/2)F)."""
    norm, first, _ = _energy_moments(beta, a, b, quad)
    return 0.5 * (a + b) - 0.5 * first / norm


def energy_fluctuation(
    beta: float, a: float, b: float, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """<H^2> - <H>^2 over both bands."""
    norm, first, second = _energy_moments(beta, a, b, quad)
    return 0.25 * second / norm - (0.5 * first / norm) ** 2


def occupied_fraction(beta: float, epsilon: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Thermal probability that the particle sits on an occupied site."""
    bands = StripedBands.for_epsilon(epsilon)

    def integrand(u: np.ndarray) -> np.ndarray:
        _, ep, em = bands.weights(u, beta)
        amp = bloch_amplitudes(u, epsilon)
        return np.stack([amp.u1_plus_sq * em + amp.u1_minus_sq * ep, ep + em])

    occupied, norm = quadrature(integrand, bands.quadrature_spec(quad))
    return float(occupied / norm)


def mean_potential(beta: float, epsilon: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """<V> = epsilon * (occupied-sublattice probability)."""
    if epsilon == 0.0:
        return 0.0
    return epsilon * occupied_fraction(beta, epsilon, quad)


def _density_rows(
    pairs: Sequence[Tuple[int, int]], beta: float, epsilon: float, quad: QuadratureSpec
) -> np.ndarray:
    """Site-normalized density-matrix elements rho(j, j') for several pairs."""
    bands = StripedBands.for_epsilon(epsilon)

    def integrand(u: np.ndarray) -> np.ndarray:
        _, ep, em = bands.weights(u, beta)
        amp = bloch_amplitudes(u, epsilon)
        rows = []
        for j, jp in pairs:
            odd_j, odd_jp = j % 2 == 1, jp % 2 == 1
            if odd_j and odd_jp:
                w_plus, w_minus = amp.u1_plus_sq, amp.u1_minus_sq
            elif not odd_j and not odd_jp:
                w_plus, w_minus = amp.u2_plus_sq, amp.u2_minus_sq
            else:
                w_plus, w_minus = amp.cross_plus, amp.cross_minus
            rows.append(np.cos(u * (j - jp)) * (w_plus * em + w_minus * ep))
        rows.append(0.5 * (ep + em))
        return np.stack(rows)

    values = np.asarray(quadrature(integrand, bands.quadrature_spec(quad)))
    return values[:-1] / values[-1]


def density_matrix_element(
    j: int, jp: int, beta: float, epsilon: float, quad: QuadratureSpec = QuadratureSpec()
) -> float:
    """
    Thermal density matrix between sites j and j', normalized per site.

    The result is N * D_{jj'} for an N-site ring, so that the average of the
    diagonal over one unit cell is 1.
    """
    return float(_density_rows([(j, jp)], beta, epsilon, quad)[0])


def g1_striped(n: int, beta: float, epsilon: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Self-correlation averaged over starting on an empty and an occupied site."""
    rows = _density_rows([(0, n), (1, 1 + n)], beta, epsilon, quad)
    return float(0.5 * (rows[0] + rows[1]))


def g2_striped(n: int, beta: float, epsilon: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Occupancy at offset n from the particle: occupied weight for even n, empty for odd n."""
    occupied = occupied_fraction(beta, epsilon, quad)
    return occupied if n % 2 == 0 else 1.0 - occupied


def striped_observables(
    beta: float,
    epsilon: float,
    n_max: int = config.DEFAULT_N_MAX,
    quad: QuadratureSpec = QuadratureSpec(),
) -> StripedObservables:
    """Bundle the exact striped-lattice results at one beta."""
    bands = StripedBands.for_epsilon(epsilon)
    norm, first, second = _energy_moments(beta, bands.a, bands.b, quad)
    occupied = occupied_fraction(beta, epsilon, quad)

    pairs = []
    for n in range(n_max + 1):
        pairs.extend([(0, n), (1, 1 + n)])
    rows = _density_rows(pairs, beta, epsilon, quad).reshape(n_max + 1, 2)
    g1 = rows.mean(axis=1)
    g2 = np.array([occupied if n % 2 == 0 else 1.0 - occupied for n in range(n_max + 1)])

    logger.debug(f"Striped observables computed at beta={beta:g}, epsilon={epsilon:g}")
    return StripedObservables(
        beta=beta,
        epsilon=epsilon,
        log_z_per_site=log_partition_per_site(beta, bands.a, bands.b, quad),
        mean_energy=bands.center - 0.5 * first / norm,
        energy_fluctuation=0.25 * second / norm - (0.5 * first / norm) ** 2,
        mean_potential=epsilon * occupied,
        g1=g1,
        g2=g2,
    )
