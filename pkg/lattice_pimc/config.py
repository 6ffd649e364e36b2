"""
Global settings and constants for lattice path-integral Monte Carlo.

This module provides the package defaults and a helper that applies
environment overrides. It has no numerical dependencies and is safe to
import from anywhere.
"""
import os
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv


# Thermodynamic defaults (energies in units of the hopping t)
DEFAULT_T: float = 1.0
DEFAULT_P: int = 100
DEFAULT_EPSILON: float = 10.0
DEFAULT_LATTICE_SIZE: int = 100

# Sampler defaults
DEFAULT_WALKS: int = 100_000
DEFAULT_SEGMENT_FRACTION: float = 0.20
DEFAULT_GLOBAL_FRACTION: float = 0.20  # share of steps that move the whole walk
REFRESH_BATCH: int = 256  # free walks drawn at once for refresh proposals
BURN_IN_PER_BEAD: int = 10  # burn-in = BURN_IN_PER_BEAD * p Metropolis steps
DEFAULT_THIN: int = 1
DEFAULT_CHAINS: int = 1
DEFAULT_SEED: int = 20240601
SAMPLE_CHUNK: int = 8192  # walks evaluated per vectorized estimator call

# Bessel kernel
BESSEL_TAIL_TOL: float = 1e-12
MILLER_MARGIN: int = 40
MIN_STEP_CUTOFF: int = 2

# Correlation tabulation
DEFAULT_N_MAX: int = 10
DEFAULT_FREE_G1_N_MAX: int = 20

# Block statistics
MIN_BLOCK_SIZE: int = 50
TARGET_BLOCKS: int = 100

# Quadrature
DEFAULT_QUAD_TOL: float = 1e-10
COMPARE_QUAD_TOL: float = 1e-8
QUAD_INITIAL_POINTS: int = 64
QUAD_MAX_POINTS: int = 2 ** 20
KINK_THRESHOLD: float = 0.05  # |a - b| below which the |cos u| kink is split out

# Default experiment matrix
FREE_BETAS: Tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
STRIPED_BETAS: Tuple[float, ...] = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0)
STRIPED_LOG_BETAS: Tuple[float, ...] = (
    0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.7, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0,
)

# Worker processes for independent (beta, chain) cells
DEFAULT_WORKERS: int = 1

# Logging
LOG_DIR: Path = Path.home() / ".lattice_pimc" / "logs"
LOG_FILE: Path = LOG_DIR / "lattice_pimc.log"


def load_env(dotenv_path: Optional[Path] = None) -> None:
    """
    Load environment variables and apply overrides to the defaults.

    Reads an optional ``.env`` file, then honours ``LATTICE_PIMC_LOG_DIR``,
    ``LATTICE_PIMC_WORKERS`` and ``LATTICE_PIMC_SEED``. It should be called
    once at startup, before logging is configured.

    Args:
        dotenv_path: Explicit ``.env`` file. If None, python-dotenv searches
            the current directory and its parents.
    """
    global LOG_DIR, LOG_FILE, DEFAULT_WORKERS, DEFAULT_SEED

    load_dotenv(dotenv_path)

    log_dir_env = os.environ.get("LATTICE_PIMC_LOG_DIR")
    if log_dir_env:
        LOG_DIR = Path(log_dir_env)
        LOG_FILE = LOG_DIR / "lattice_pimc.log"

    workers_env = os.environ.get("LATTICE_PIMC_WORKERS")
    if workers_env and workers_env.isdigit():
        DEFAULT_WORKERS = max(1, int(workers_env))

    seed_env = os.environ.get("LATTICE_PIMC_SEED")
    if seed_env and seed_env.isdigit():
        DEFAULT_SEED = int(seed_env)
