"""
Experiment commands: exact datasets, Monte Carlo runs and comparisons.

A Monte Carlo run is split into independent cells, one per (beta, chain).
Every cell gets its own random stream spawned from the run seed, so the
output does not depend on the number of worker processes.
"""
import concurrent.futures
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from lattice_pimc import config
from lattice_pimc.core import exact_free, exact_striped
from lattice_pimc.core.estimators import BlockAccumulator, EstimatorKernel, default_block_size
from lattice_pimc.core.settings import ExperimentConfig, LatticeSpec, SamplerSchedule
from lattice_pimc.core.walk_sampler import MetropolisChain, sample_closed_walks
from lattice_pimc.experiments import comparison, output
from lattice_pimc.models import (
    ComparisonRow,
    FreeObservables,
    RunStats,
    StripedObservables,
    ThermoParams,
)
from lattice_pimc.numerics.quadrature import QuadratureSpec
from lattice_pimc.utils.errors import (
    ExperimentConfigError,
    QuadratureError,
    SamplerError,
    StatisticsError,
)
from lattice_pimc.utils.logging_cfg import run_log

logger = logging.getLogger(__name__)


@dataclass
class CellTask:
    """One independent chain at one beta; plain fields so it pickles cleanly."""
    index: int
    beta: float
    t: float
    p: int
    lattice: LatticeSpec
    schedule: SamplerSchedule
    n_max: int
    seed: np.random.SeedSequence
    debug: bool = False


@dataclass
class CellResult:
    index: int
    beta: float
    stats: Optional[RunStats]
    status: str
    wall_time: float


def run_cell(task: CellTask) -> CellResult:
    """
    Sample one cell and block-average its estimators.

    Free lattices draw independent walks directly; lattices with a potential
    run a Metropolis chain. Sampling and statistics errors are reported in
    the result instead of being raised.
    """
    started = time.perf_counter()
    lattice = task.lattice.build()
    params = ThermoParams(beta=task.beta, t=task.t, p=task.p)
    schedule = task.schedule
    rng = np.random.default_rng(task.seed)
    n_samples = schedule.n_samples
    block_size = schedule.block_size or default_block_size(n_samples)

    kernel = EstimatorKernel(params, lattice, task.n_max)
    acc = BlockAccumulator(kernel.columns, block_size)

    try:
        if lattice.is_free:
            remaining = n_samples
            while remaining > 0:
                count = min(config.SAMPLE_CHUNK, remaining)
                positions = sample_closed_walks(count, params.p, params, rng, lattice.size)
                acc.add(kernel.evaluate(positions).values)
                remaining -= count
            accepted = proposed = n_samples
        else:
            chain = MetropolisChain(
                lattice, params, schedule.segment_fraction, rng,
                debug=task.debug, global_fraction=schedule.global_fraction,
            )
            burn_in = schedule.burn_in if schedule.burn_in is not None else config.BURN_IN_PER_BEAD * params.p
            chain.burn_in(burn_in)
            buffer: List[np.ndarray] = []
            for positions in chain.samples(n_samples, schedule.thin):
                buffer.append(positions)
                if len(buffer) == config.SAMPLE_CHUNK:
                    acc.add(kernel.evaluate(np.stack(buffer)).values)
                    buffer.clear()
            if buffer:
                acc.add(kernel.evaluate(np.stack(buffer)).values)
            accepted, proposed = chain.state.accepted, chain.state.proposed
        stats = acc.finish(accepted=accepted, proposed=proposed)
        status = "ok"
    except (SamplerError, StatisticsError) as exc:
        stats, status = None, f"{type(exc).__name__}: {exc}"

    elapsed = time.perf_counter() - started
    return CellResult(task.index, task.beta, stats, status, elapsed)


def build_tasks(cfg: ExperimentConfig, debug: bool = False) -> List[CellTask]:
    """One task per (beta, chain), seeded from the run seed in index order."""
    chains = cfg.schedule.chains
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.betas) * chains)
    tasks = []
    for i, beta in enumerate(cfg.betas):
        for c in range(chains):
            index = i * chains + c
            tasks.append(
                CellTask(
                    index=index,
                    beta=float(beta),
                    t=cfg.t,
                    p=cfg.p,
                    lattice=cfg.lattice,
                    schedule=cfg.schedule,
                    n_max=cfg.n_max,
                    seed=seeds[index],
                    debug=debug,
                )
            )
    return tasks


def run_cells(tasks: Sequence[CellTask], workers: int = 1) -> List[CellResult]:
    """Run tasks in-process or on a process pool; results come back in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [run_cell(task) for task in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_cell, tasks))


def merge_by_beta(
    cfg: ExperimentConfig, results: Sequence[CellResult]
) -> List[Tuple[float, Optional[RunStats], str]]:
    """Combine the chains of each beta; any failed chain marks the row."""
    chains = cfg.schedule.chains
    merged = []
    for i, beta in enumerate(cfg.betas):
        cells = results[i * chains:(i + 1) * chains]
        failures = [c.status for c in cells if c.stats is None]
        stats: Optional[RunStats] = None
        if not failures:
            stats = cells[0].stats
            for cell in cells[1:]:
                stats = stats.merge(cell.stats)
        wall = sum(c.wall_time for c in cells)
        if stats is not None:
            logger.info(
                f"beta={beta:g}: {stats.n_samples} samples in {wall:.2f} s, "
                f"acceptance {stats.acceptance_rate:.4f}"
            )
        else:
            logger.warning(f"beta={beta:g}: {failures[0]}")
        merged.append((float(beta), stats, "ok" if stats is not None else failures[0]))
    return merged


def cmd_exact_free(
    betas: Sequence[float],
    t: float = config.DEFAULT_T,
    n_max: int = config.DEFAULT_FREE_G1_N_MAX,
    out: Optional[Path] = None,
) -> List[FreeObservables]:
    """Exact free-particle table: Z/L, <H>, fluctuation and G1(0..n_max) per beta."""
    results = []
    rows = []
    for beta in betas:
        exact = exact_free.free_observables(ThermoParams(beta=beta, t=t, p=2), n_max)
        results.append(exact)
        rows.append([beta, exact.z_per_site, exact.mean_energy, exact.energy_fluctuation] + list(exact.g1))
    output.write_csv(out, output.free_header(n_max), rows)
    return results


def cmd_exact_striped(
    betas: Sequence[float],
    epsilon: float = config.DEFAULT_EPSILON,
    n_max: int = config.DEFAULT_N_MAX,
    quad_tol: float = config.DEFAULT_QUAD_TOL,
    out: Optional[Path] = None,
) -> List[Optional[StripedObservables]]:
    """
    Exact striped-lattice table with a closing beta=inf ground-state row.

    A quadrature failure marks its row and the command continues.
    """
    quad = QuadratureSpec(rel_tol=quad_tol)
    results: List[Optional[StripedObservables]] = []
    rows = []
    blank = [math.nan] * (2 * (n_max + 1))
    for beta in betas:
        try:
            exact = exact_striped.striped_observables(beta, epsilon, n_max, quad)
        except QuadratureError as exc:
            logger.warning(f"beta={beta:g}: {exc}")
            results.append(None)
            rows.append([beta, math.nan, math.nan, math.nan, math.nan] + blank + [f"quadrature: {exc}"])
            continue
        results.append(exact)
        rows.append(
            [beta, exact.log_z_per_site, exact.mean_energy, exact.energy_fluctuation, exact.mean_potential]
            + list(exact.g1)
            + list(exact.g2)
            + ["ok"]
        )

    bands = exact_striped.StripedBands.for_epsilon(epsilon)
    rows.append(
        [math.inf, math.nan, exact_striped.ground_state_energy(bands.a, bands.b), 0.0,
         exact_striped.ground_state_potential(epsilon)]
        + blank
        + ["ground_state"]
    )
    output.write_csv(out, output.striped_header(n_max), rows)
    return results


def _log_path(out: Optional[Path]) -> Optional[Path]:
    return Path(out).with_suffix(".log") if out is not None else None


def _log_run_header(cfg: ExperimentConfig, command: str) -> None:
    logger.info(f"{command}: seed={cfg.seed} p={cfg.p} t={cfg.t} betas={list(cfg.betas)}")
    logger.info(f"{command}: configuration {cfg.to_dict()}")


def cmd_pimc(cfg: ExperimentConfig, debug: bool = False) -> List[Tuple[float, Optional[RunStats], str]]:
    """Monte Carlo estimates with block errors for every beta of cfg."""
    cfg.validate()
    with run_log(_log_path(cfg.out)):
        _log_run_header(cfg, "pimc")
        started = time.perf_counter()
        merged = merge_by_beta(cfg, run_cells(build_tasks(cfg, debug), cfg.workers))

        rows = []
        n_cols = len(output.pimc_header(cfg.n_max))
        for beta, stats, status in merged:
            if stats is None:
                rows.append([beta, cfg.p] + [math.nan] * (n_cols - 3) + [status])
                continue
            fluct, fluct_err = stats.energy_fluctuation()
            thermo, thermo_err = stats.thermo_fluctuation()
            row = [
                beta, cfg.p, stats.n_samples, stats.block_size, stats.acceptance_rate,
                stats.mean("energy"), stats.stderr("energy"), fluct, fluct_err,
                thermo, thermo_err, stats.mean("v"), stats.stderr("v"),
            ]
            for n in range(cfg.n_max + 1):
                row += [stats.mean(f"g1_{n}"), stats.stderr(f"g1_{n}")]
            for n in range(cfg.n_max + 1):
                row += [stats.mean(f"g2_{n}"), stats.stderr(f"g2_{n}")]
            rows.append(row + [status])

        output.write_csv(cfg.out, output.pimc_header(cfg.n_max), rows)
        logger.info(f"pimc: total wall time {time.perf_counter() - started:.2f} s")
    return merged


def cmd_compare(cfg: ExperimentConfig, debug: bool = False) -> Tuple[List[ComparisonRow], bool]:
    """
    Run Monte Carlo and the matching exact solution, then apply tolerance policies.

    Returns:
        The comparison rows and whether every row passed.

    Raises:
        ExperimentConfigError: For lattices without an exact solution.
    """
    cfg.validate()
    pattern = cfg.lattice.pattern
    if pattern not in ("free", "striped"):
        raise ExperimentConfigError(f"no exact solution for lattice pattern {pattern!r}")
    quad = QuadratureSpec(rel_tol=min(cfg.quad_tol, config.COMPARE_QUAD_TOL))

    with run_log(_log_path(cfg.out)):
        _log_run_header(cfg, "compare")
        merged = merge_by_beta(cfg, run_cells(build_tasks(cfg, debug), cfg.workers))

        rows: List[ComparisonRow] = []
        all_passed = True
        for beta, stats, status in merged:
            if stats is None:
                logger.error(f"beta={beta:g}: no Monte Carlo statistics ({status})")
                all_passed = False
                continue
            if pattern == "free":
                exact = exact_free.free_observables(cfg.thermo(beta), cfg.n_max)
                beta_rows = comparison.free_rows(beta, stats, exact, cfg.n_max)
            else:
                try:
                    exact = exact_striped.striped_observables(beta, cfg.lattice.epsilon, cfg.n_max, quad)
                except QuadratureError as exc:
                    logger.error(f"beta={beta:g}: {exc}")
                    all_passed = False
                    continue
                beta_rows = comparison.striped_rows(beta, stats, exact, cfg.n_max)
            for row in beta_rows:
                if not row.passed:
                    all_passed = False
                    logger.warning(
                        f"FAIL {row.observable} beta={beta:g}: analytic={row.analytic:.6g} "
                        f"mc={row.mc_mean:.6g}+/-{row.mc_stderr:.2g} ({row.policy.name})"
                    )
            rows.extend(beta_rows)

        output.write_csv(
            cfg.out, output.COMPARE_HEADER, [comparison.comparison_record(r) for r in rows]
        )
        logger.info(f"compare: {'all rows passed' if all_passed else 'some rows failed'}")
    return rows, all_passed
