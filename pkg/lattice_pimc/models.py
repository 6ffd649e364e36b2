"""
Core domain models for lattice path-integral Monte Carlo.

This module contains pure domain models (dataclasses) without any file or
CLI dependencies. They represent the thermodynamic parameters, the lattice,
the sampled ring polymers and the statistics gathered from them.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from lattice_pimc.utils.errors import LatticeConfigError, ParameterError, StatisticsError


@dataclass(frozen=True, slots=True)
class ThermoParams:
    """Inverse temperature, hopping energy and Trotter number of a run."""
    beta: float
    t: float = 1.0
    p: int = 100

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or self.beta < 0:
            raise ParameterError(f"beta must be finite and >= 0, got {self.beta}")
        if not math.isfinite(self.t) or self.t <= 0:
            raise ParameterError(f"hopping t must be > 0, got {self.t}")
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 2:
            raise ParameterError(f"Trotter number p must be an integer >= 2, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def z(self) -> float:
        """Weight argument 2*beta*t/p of a single imaginary-time slice."""
        return 2.0 * self.beta * self.t / self.p

    def with_beta(self, beta: float) -> "ThermoParams":
        """Return a copy at another inverse temperature."""
        return ThermoParams(beta=beta, t=self.t, p=self.p)


@dataclass(frozen=True, slots=True)
class LatticeConfig:
    """Periodic 1D lattice with quenched occupancy and on-site potential epsilon."""
    occupancy: Tuple[int, ...]
    epsilon: float = 0.0
    _occupancy_array: np.ndarray = field(init=False, repr=False, compare=False)
    _potentials: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        occupancy = tuple(int(n) for n in self.occupancy)
        if not occupancy:
            raise LatticeConfigError("lattice must have at least one site")
        if any(n not in (0, 1) for n in self.occupancy):
            raise LatticeConfigError("occupancy entries must be exactly 0 or 1")
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise LatticeConfigError(f"epsilon must be finite and >= 0, got {self.epsilon}")

        occ = np.asarray(occupancy, dtype=np.int64)
        occ.setflags(write=False)
        pot = self.epsilon * occ.astype(float)
        pot.setflags(write=False)
        object.__setattr__(self, "occupancy", occupancy)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "_occupancy_array", occ)
        object.__setattr__(self, "_potentials", pot)

    @property
    def size(self) -> int:
        """Number of lattice sites L."""
        return len(self.occupancy)

    @property
    def occupancy_array(self) -> np.ndarray:
        """Read-only integer array of n_j."""
        return self._occupancy_array

    @property
    def potentials(self) -> np.ndarray:
        """Read-only array of epsilon * n_j."""
        return self._potentials

    @property
    def is_free(self) -> bool:
        """True when no site carries a potential."""
        return self.epsilon == 0.0 or not any(self.occupancy)


@dataclass(slots=True)
class ClosedWalk:
    """
    A closed p-step walk on the infinite lattice.

    Positions are kept unreduced; the closing step runs from the last bead
    back to the first.
    """
    positions: np.ndarray

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=np.int64).reshape(-1)

    @property
    def p(self) -> int:
        return int(self.positions.shape[0])

    @property
    def steps(self) -> np.ndarray:
        """s_alpha = j_{alpha+1} - j_alpha with the last step closing the ring."""
        return np.roll(self.positions, -1) - self.positions

    @property
    def start_site(self) -> int:
        return int(self.positions[0])

    def copy(self) -> "ClosedWalk":
        return ClosedWalk(self.positions.copy())


@dataclass(slots=True)
class ObservableSample:
    """Estimator values of a single walk."""
    tau: float
    tau2: float
    v: float
    h: float = 0.0
    gamma1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def energy(self) -> float:
        return self.tau + self.v


def observable_columns(n_max: int) -> Tuple[str, ...]:
    """Column names of an ObservableBatch holding correlations up to n_max."""
    base = ("tau", "tau2", "v", "h", "energy", "energy_sq")
    g1 = tuple(f"g1_{n}" for n in range(n_max + 1))
    g2 = tuple(f"g2_{n}" for n in range(n_max + 1))
    return base + g1 + g2


@dataclass(slots=True)
class ObservableBatch:
    """Estimator values of many walks, one row per walk."""
    columns: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise StatisticsError(
                f"values of shape {self.values.shape} do not match {len(self.columns)} columns"
            )

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_max(self) -> int:
        return sum(1 for c in self.columns if c.startswith("g1_")) - 1

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def sample(self, i: int) -> ObservableSample:
        """Return row i as an ObservableSample."""
        n_max = self.n_max
        row = dict(zip(self.columns, self.values[i]))
        return ObservableSample(
            tau=row["tau"],
            tau2=row["tau2"],
            v=row["v"],
            h=row["h"],
            gamma1=np.array([row[f"g1_{n}"] for n in range(n_max + 1)]),
            gamma2=np.array([row[f"g2_{n}"] for n in range(n_max + 1)]),
        )

    @classmethod
    def from_samples(cls, samples: Sequence[ObservableSample]) -> "ObservableBatch":
        """Stack per-walk samples into a batch."""
        if not samples:
            raise StatisticsError("no samples to stack")
        columns = observable_columns(len(samples[0].gamma1) - 1)
        rows = []
        for s in samples:
            energy = s.tau + s.v
            rows.append(
                [s.tau, s.tau2, s.v, s.h, energy, energy * energy]
                + list(np.asarray(s.gamma1, dtype=float))
                + list(np.asarray(s.gamma2, dtype=float))
            )
        return cls(columns=columns, values=np.array(rows, dtype=float))


def _jackknife(
    block_means: np.ndarray, func: Callable[[np.ndarray], float]
) -> Tuple[float, float]:
    """Block jackknife of a function of the column means."""
    nb = block_means.shape[0]
    total = block_means.sum(axis=0)
    estimate = float(func(total / nb))
    leave_one_out = (total[None, :] - block_means) / (nb - 1)
    partials = np.array([func(row) for row in leave_one_out])
    error = math.sqrt((nb - 1) / nb * float(np.sum((partials - partials.mean()) ** 2)))
    return estimate, error


@dataclass(slots=True)
class RunStats:
    """
    Block-averaged statistics of one or more chains.

    Only block means are stored; grand means and standard errors are
    derived from them, so merged chains combine associatively.
    """
    columns: Tuple[str, ...]
    block_means: np.ndarray
    block_size: int
    accepted: int = 0
    proposed: int = 0

    def __post_init__(self) -> None:
        self.block_means = np.asarray(self.block_means, dtype=float).reshape(-1, len(self.columns))
        if self.block_means.shape[0] < 2:
            raise StatisticsError(
                f"need at least 2 full blocks, got {self.block_means.shape[0]}"
            )

    @property
    def n_blocks(self) -> int:
        return int(self.block_means.shape[0])

    @property
    def n_samples(self) -> int:
        return self.n_blocks * self.block_size

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")

    def _index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise KeyError(f"no observable named {name!r}") from None

    def mean(self, name: str) -> float:
        return float(self.block_means[:, self._index(name)].mean())

    def stderr(self, name: str) -> float:
        col = self.block_means[:, self._index(name)]
        return float(col.std(ddof=1) / math.sqrt(self.n_blocks))

    def means(self) -> Dict[str, float]:
        return {name: self.mean(name) for name in self.columns}

    def energy_fluctuation(self) -> Tuple[float, float]:
        """Kinetic fluctuation <tau2> - <tau>^2 with its jackknife error."""
        i, j = self._index("tau2"), self._index("tau")
        return _jackknife(self.block_means, lambda m: m[i] - m[j] ** 2)

    def thermo_fluctuation(self) -> Tuple[float, float]:
        """Thermodynamic fluctuation <E^2> - <E>^2 + <h> with its jackknife error."""
        i, j, k = self._index("energy_sq"), self._index("energy"), self._index("h")
        return _jackknife(self.block_means, lambda m: m[i] - m[j] ** 2 + m[k])

    def merge(self, other: "RunStats") -> "RunStats":
        """Combine the blocks of two runs sampled with the same block size."""
        if other.columns != self.columns:
            raise StatisticsError("cannot merge statistics with different observables")
        if other.block_size != self.block_size:
            raise StatisticsError(
                f"cannot merge block sizes {self.block_size} and {other.block_size}"
            )
        return RunStats(
            columns=self.columns,
            block_means=np.vstack([self.block_means, other.block_means]),
            block_size=self.block_size,
            accepted=self.accepted + other.accepted,
            proposed=self.proposed + other.proposed,
        )


@dataclass(frozen=True, slots=True)
class TolerancePolicy:
    """Pass criterion for an analytic-vs-Monte-Carlo comparison."""
    name: str
    abs_tol: Optional[float] = None
    rel_tol: Optional[float] = None
    sigma: Optional[float] = None
    informational: bool = False

    def accepts(self, analytic: float, mc_mean: float, mc_stderr: float) -> bool:
        if self.informational:
            return True
        if not (math.isfinite(analytic) and math.isfinite(mc_mean)):
            return False
        deviation = abs(mc_mean - analytic)
        if self.abs_tol is not None and deviation >= self.abs_tol:
            return False
        if self.rel_tol is not None:
            if analytic == 0.0 or deviation / abs(analytic) >= self.rel_tol:
                return False
        if self.sigma is not None and deviation > self.sigma * mc_stderr:
            return False
        return True


@dataclass(slots=True)
class ComparisonRow:
    """One observable at one beta, analytic against Monte Carlo."""
    observable: str
    beta: float
    analytic: float
    mc_mean: float
    mc_stderr: float
    policy: TolerancePolicy

    @property
    def abs_deviation(self) -> float:
        return abs(self.mc_mean - self.analytic)

    @property
    def rel_deviation(self) -> float:
        if self.analytic == 0.0:
            return float("inf") if self.abs_deviation > 0 else 0.0
        return self.abs_deviation / abs(self.analytic)

    @property
    def passed(self) -> bool:
        return self.policy.accepts(self.analytic, self.mc_mean, self.mc_stderr)


@dataclass(slots=True)
class FreeObservables:
    """Exact free-particle observables at one beta (infinite lattice)."""
    beta: float
    z_per_site: float
    mean_energy: float
    energy_fluctuation: float
    g1: np.ndarray


@dataclass(slots=True)
class StripedObservables:
    """Exact striped-lattice observables at one beta."""
    beta: float
    epsilon: float
    log_z_per_site: float
    mean_energy: float
    energy_fluctuation: float
    mean_potential: float
    g1: np.ndarray
    g2: np.ndarray

    @property
    def z_per_site(self) -> float:
        return math.exp(self.log_z_per_site)
