"""
Exact canonical observables of the free particle on an infinite lattice.

Every quantity reduces to modified Bessel functions of argument 2*beta*t,
taken from scaled tables so large beta never overflows.
"""
import math

import numpy as np

from lattice_pimc import config
from lattice_pimc.models import FreeObservables, ThermoParams
from lattice_pimc.numerics.bessel import BesselTable, cached_table
from lattice_pimc.utils.errors import ParameterError


def _table(params: ThermoParams, max_order: int = 2) -> BesselTable:
    return cached_table(2.0 * params.beta * params.t, max(2, max_order))


def spectrum_at(alpha: int, size: int, t: float = 1.0) -> float:
    """Energy 2t - 2t cos(2 pi alpha / L) of plane wave alpha on a ring of L sites."""
    if not 1 <= alpha <= size:
        raise ParameterError(f"alpha must lie in 1..{size}, got {alpha}")
    return 2.0 * t - 2.0 * t * math.cos(2.0 * math.pi * alpha / size)


def partition_per_site(params: ThermoParams) -> float:
    """Z/L = e^{-2 beta t} I_0(2 beta t)."""
    return float(_table(params).scaled(0))


def log_partition_per_site(params: ThermoParams) -> float:
    """ln(Z/L), finite for every beta."""
    return math.log(_table(params).scaled(0))


def mean_energy(params: ThermoParams) -> float:
    """<H> = 2t - 2t I_1/I_0."""
    table = _table(params)
    return 2.0 * params.t - 2.0 * params.t * table.scaled(1) / table.scaled(0)


def energy_fluctuation(params: ThermoParams) -> float:
    """<H^2> - <H>^2 = 2t^2 + 2t^2 I_2/I_0 - 4t^2 (I_1/I_0)^2."""
    table = _table(params)
    i0, i1, i2 = table.scaled(0), table.scaled(1), table.scaled(2)
    t2 = params.t * params.t
    return 2.0 * t2 + 2.0 * t2 * i2 / i0 - 4.0 * t2 * (i1 / i0) ** 2


def g1_exact(n: int, params: ThermoParams) -> float:
    """Particle self-correlation at separation n: I_n/I_0."""
    table = _table(params, abs(n))
    return float(table.scaled(n) / table.scaled(0))


def finite_partition_per_site(params: ThermoParams, size: int) -> float:
    """(1/L) sum_alpha e^{-beta E_alpha} on a ring of L sites."""
    alpha = np.arange(1, size + 1)
    energies = 2.0 * params.t - 2.0 * params.t * np.cos(2.0 * np.pi * alpha / size)
    return float(np.mean(np.exp(-params.beta * energies)))


def free_observables(params: ThermoParams, n_max: int = config.DEFAULT_FREE_G1_N_MAX) -> FreeObservables:
    """Bundle the exact free-particle results at one beta."""
    table = _table(params, n_max)
    g1 = np.asarray(table.scaled(np.arange(n_max + 1))) / table.scaled(0)
    return FreeObservables(
        beta=params.beta,
        z_per_site=partition_per_site(params),
        mean_energy=mean_energy(params),
        energy_fluctuation=energy_fluctuation(params),
        g1=g1,
    )
