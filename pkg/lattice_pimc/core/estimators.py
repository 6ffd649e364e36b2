"""
Classical estimators evaluated on closed walks, and block statistics.

Per-walk functions take a ClosedWalk and mirror the operator they estimate.
EstimatorKernel evaluates all of them at once on an (n_walks, p) array of
positions, which is what the experiment commands use.
"""
import logging
from typing import Iterable, Optional, Union

import numpy as np

from lattice_pimc import config
from lattice_pimc.models import (
    ClosedWalk,
    LatticeConfig,
    ObservableBatch,
    ObservableSample,
    RunStats,
    ThermoParams,
    observable_columns,
)
from lattice_pimc.numerics.bessel import BesselTable, cached_table, dlog1, dlog2, step_cutoff
from lattice_pimc.utils.errors import StatisticsError

logger = logging.getLogger(__name__)


def _walk_table(walk: ClosedWalk, params: ThermoParams, extra: int) -> BesselTable:
    max_step = int(np.abs(walk.steps).max()) if walk.p else 0
    return cached_table(params.z, max(2, max_step + extra))


def kinetic_estimator(walk: ClosedWalk, params: ThermoParams) -> float:
    """tau = 2t - (2t/p) sum_alpha I'_s / I_s."""
    table = _walk_table(walk, params, 1)
    p, t = walk.p, params.t
    return float(2.0 * t - 2.0 * t / p * np.sum(dlog1(walk.steps, table)))


def kinetic_sq_estimator(walk: ClosedWalk, params: ThermoParams) -> float:
    """tau2 = (4t^2/p) sum I''_s/I_s - (8t^2/p) sum I'_s/I_s + 4t^2."""
    table = _walk_table(walk, params, 2)
    p, t2 = walk.p, params.t * params.t
    steps = walk.steps
    return float(
        4.0 * t2 / p * np.sum(dlog2(steps, table))
        - 8.0 * t2 / p * np.sum(dlog1(steps, table))
        + 4.0 * t2
    )


def fluctuation_correction_estimator(walk: ClosedWalk, params: ThermoParams) -> float:
    """h = (4t^2/p^2) sum [I''_s/I_s - (I'_s/I_s)^2], the -dE/dbeta term of a walk."""
    table = _walk_table(walk, params, 2)
    steps = walk.steps
    d1 = dlog1(steps, table)
    return float(4.0 * params.t ** 2 / walk.p ** 2 * np.sum(dlog2(steps, table) - d1 * d1))


def g1_estimator(walk: ClosedWalk, n: int, params: ThermoParams) -> float:
    """Gamma1(n) = (1/p) sum I_{j_alpha - j_{alpha+1} - n} / I_{j_alpha - j_{alpha+1}}."""
    table = _walk_table(walk, params, abs(n))
    steps = walk.steps
    return float(np.mean(table.scaled(-steps - n) / table.scaled(steps)))


def g2_estimator(walk: ClosedWalk, n: int, lattice: LatticeConfig) -> float:
    """Gamma2(n) = (1/p) sum n_{(j_alpha - n) mod L}."""
    return float(np.mean(lattice.occupancy_array[np.mod(walk.positions - n, lattice.size)]))


def potential_estimator(walk: ClosedWalk, lattice: LatticeConfig) -> float:
    """v = (1/p) sum epsilon n_{j_alpha mod L}."""
    return float(np.mean(lattice.potentials[np.mod(walk.positions, lattice.size)]))


def evaluate_walk(
    walk: ClosedWalk, params: ThermoParams, lattice: LatticeConfig, n_max: int = config.DEFAULT_N_MAX
) -> ObservableSample:
    """All estimators of one walk."""
    return ObservableSample(
        tau=kinetic_estimator(walk, params),
        tau2=kinetic_sq_estimator(walk, params),
        v=potential_estimator(walk, lattice),
        h=fluctuation_correction_estimator(walk, params),
        gamma1=np.array([g1_estimator(walk, n, params) for n in range(n_max + 1)]),
        gamma2=np.array([g2_estimator(walk, n, lattice) for n in range(n_max + 1)]),
    )


class EstimatorKernel:
    """
    Vectorized estimators for a fixed (params, lattice, n_max).

    One Bessel table covers every walk the sampler can produce: its order is
    the step cutoff plus n_max plus 2.
    """

    def __init__(
        self,
        params: ThermoParams,
        lattice: LatticeConfig,
        n_max: int = config.DEFAULT_N_MAX,
        s_max: Optional[int] = None,
    ):
        self.params = params
        self.lattice = lattice
        self.n_max = n_max
        self.s_max = s_max if s_max is not None else step_cutoff(params.z)
        self.table = cached_table(params.z, self.s_max + n_max + 2)
        self.columns = observable_columns(n_max)

    def evaluate(self, positions: np.ndarray) -> ObservableBatch:
        """Evaluate every estimator on each row of an (n_walks, p) position array."""
        positions = np.atleast_2d(np.asarray(positions, dtype=np.int64))
        p = positions.shape[1]
        t = self.params.t
        table = self.table
        steps = np.abs(np.roll(positions, -1, axis=1) - positions)

        center = table.scaled(steps)
        d1 = (table.scaled(np.abs(steps - 1)) + table.scaled(steps + 1)) / (2.0 * center)
        d2 = (table.scaled(np.abs(steps - 2)) + 2.0 * center + table.scaled(steps + 2)) / (4.0 * center)
        sum_d1 = d1.sum(axis=1)
        sum_d2 = d2.sum(axis=1)

        tau = 2.0 * t - 2.0 * t / p * sum_d1
        tau2 = 4.0 * t * t / p * sum_d2 - 8.0 * t * t / p * sum_d1 + 4.0 * t * t
        h = 4.0 * t * t / p ** 2 * (d2 - d1 * d1).sum(axis=1)

        reduced = np.mod(positions, self.lattice.size)
        v = self.lattice.potentials[reduced].mean(axis=1)
        energy = tau + v

        # Gamma1 uses the step j_alpha - j_{alpha+1}; only its magnitude enters the denominator
        signed = np.roll(positions, -1, axis=1) - positions
        g1 = [(table.scaled(-signed - n) / center).mean(axis=1) for n in range(self.n_max + 1)]
        occ = self.lattice.occupancy_array
        size = self.lattice.size
        g2 = [occ[np.mod(positions - n, size)].mean(axis=1) for n in range(self.n_max + 1)]

        values = np.column_stack([tau, tau2, v, h, energy, energy * energy] + g1 + g2)
        return ObservableBatch(columns=self.columns, values=values)


def default_block_size(n_samples: int) -> int:
    """n_samples / TARGET_BLOCKS, at least MIN_BLOCK_SIZE."""
    return max(config.MIN_BLOCK_SIZE, n_samples // config.TARGET_BLOCKS)


class BlockAccumulator:
    """Streaming block averages; a trailing partial block is discarded."""

    def __init__(self, columns, block_size: int):
        if block_size < 1:
            raise StatisticsError(f"block size must be >= 1, got {block_size}")
        self.columns = tuple(columns)
        self.block_size = block_size
        self._blocks = []
        self._pending = np.zeros((0, len(self.columns)))

    def add(self, values: np.ndarray) -> None:
        data = np.vstack([self._pending, np.asarray(values, dtype=float)])
        n_full = data.shape[0] // self.block_size
        if n_full:
            cut = n_full * self.block_size
            blocks = data[:cut].reshape(n_full, self.block_size, -1).mean(axis=1)
            self._blocks.append(blocks)
            data = data[cut:]
        self._pending = data

    def finish(self, accepted: int = 0, proposed: int = 0) -> RunStats:
        if self._pending.shape[0]:
            logger.debug(f"Discarding {self._pending.shape[0]} samples of a partial block")
        n_blocks = sum(b.shape[0] for b in self._blocks)
        if n_blocks < 2:
            raise StatisticsError(
                f"only {n_blocks} full block(s) of size {self.block_size}; need at least 2"
            )
        return RunStats(
            columns=self.columns,
            block_means=np.vstack(self._blocks),
            block_size=self.block_size,
            accepted=accepted,
            proposed=proposed,
        )


def aggregate(
    samples: Union[ObservableBatch, Iterable[ObservableSample]],
    block_size: Optional[int] = None,
    accepted: int = 0,
    proposed: int = 0,
) -> RunStats:
    """
    Block-average a batch or a stream of per-walk samples.

    Raises:
        StatisticsError: If fewer than two full blocks are available.
    """
    if not isinstance(samples, ObservableBatch):
        samples = list(samples)
        if not samples:
            raise StatisticsError("no samples to aggregate")
        samples = ObservableBatch.from_samples(samples)
    size = block_size if block_size is not None else default_block_size(len(samples))
    acc = BlockAccumulator(samples.columns, size)
    acc.add(samples.values)
    return acc.finish(accepted=accepted, proposed=proposed)
