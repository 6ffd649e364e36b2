"""
Closed random walks with the free-particle Bessel measure.

A single imaginary-time slice moves the particle by s sites with weight
a_s = e^{-z} I_s(z), z = 2*beta*t/p, truncated at |s| <= s_max. Walks are
built step by step from exact conditional (bridge) laws: with r steps left
and a running displacement d from the target, the next step s has
probability proportional to a_s * W_{r-1}(d + s), where W_k is the k-fold
convolution of the truncated kernel. The same construction redraws a
contiguous segment between two fixed beads, which is the local Metropolis
proposal for lattices with a potential. Chains also mix in whole-walk
moves (a fresh free walk, or a rigid one-site shift) so that the walk can
change sublattice when the slice argument is small.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Tuple

import numpy as np

from lattice_pimc import config
from lattice_pimc.core.settings import SamplerSchedule
from lattice_pimc.models import ClosedWalk, LatticeConfig, ThermoParams
from lattice_pimc.numerics.bessel import build_table, log_value, step_cutoff
from lattice_pimc.utils.errors import OrderRangeError, ParameterError, SamplerError

logger = logging.getLogger(__name__)


def enumeration_order(s_max: int) -> np.ndarray:
    """Steps in the order 0, +1, -1, +2, -2, ..., +s_max, -s_max."""
    order = [0]
    for s in range(1, s_max + 1):
        order.extend([s, -s])
    return np.array(order, dtype=np.int64)


class StepDistribution:
    """
    Conditional step law for one slice argument z.

    Bridge weights W_k are kept in a padded 2-D array indexed by
    (k, m + offset) and grown on demand.
    """

    def __init__(self, z: float, s_max: Optional[int] = None):
        if not math.isfinite(z) or z < 0:
            raise ParameterError(f"weight argument must be finite and >= 0, got {z}")
        self.z = float(z)
        self.s_max = int(s_max) if s_max is not None else step_cutoff(self.z)
        if self.s_max < 1:
            raise ParameterError(f"step cutoff must be >= 1, got {self.s_max}")

        table = build_table(self.z, max(2, self.s_max))
        self.order = enumeration_order(self.s_max)
        steps = np.arange(-self.s_max, self.s_max + 1)
        self.kernel = np.asarray(table.scaled(steps), dtype=float)
        self.kernel_ordered = self.kernel[self.order + self.s_max]
        self.tail_mass = max(0.0, 1.0 - float(self.kernel.sum()))

        self._max_k = 0
        self._offset = 0
        self._weights = np.ones((1, 1))

    def _ensure(self, k: int) -> None:
        if k <= self._max_k:
            return
        max_k = max(k, 2 * self._max_k)
        offset = max_k * self.s_max
        weights = np.zeros((max_k + 1, 2 * offset + 1))
        current = np.array([1.0])
        weights[0, offset] = 1.0
        for i in range(1, max_k + 1):
            current = np.convolve(current, self.kernel)
            half = i * self.s_max
            weights[i, offset - half: offset + half + 1] = current
        self._max_k, self._offset, self._weights = max_k, offset, weights

    def bridge_weight(self, k: int, m: np.ndarray) -> np.ndarray:
        """W_k(m), the truncated-measure weight of k steps summing to m."""
        self._ensure(k)
        m = np.asarray(m, dtype=np.int64)
        idx = m + self._offset
        inside = (idx >= 0) & (idx < self._weights.shape[1])
        out = np.zeros(m.shape)
        out[inside] = self._weights[k, idx[inside]]
        return out

    def probabilities(self, r: int, d: int) -> np.ndarray:
        """P(s | r, d) over the enumeration order."""
        w = self.kernel_ordered * self.bridge_weight(r - 1, d + self.order)
        total = w.sum()
        if total <= 0.0:
            raise SamplerError(f"no closing path for displacement {d} with {r} steps left")
        return w / total

    def sample(self, r: int, d: int, rng: np.random.Generator) -> int:
        """Draw one step by partitioning the unit interval in enumeration order."""
        if r < 1:
            raise SamplerError(f"remaining steps must be >= 1, got {r}")
        w = self.kernel_ordered * self.bridge_weight(r - 1, d + self.order)
        cum = np.cumsum(w)
        if cum[-1] <= 0.0:
            raise SamplerError(f"no closing path for displacement {d} with {r} steps left")
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return int(self.order[min(idx, len(self.order) - 1)])

    def sample_batch(self, r: int, d: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorized sample for an array of residual displacements."""
        if r < 1:
            raise SamplerError(f"remaining steps must be >= 1, got {r}")
        d = np.asarray(d, dtype=np.int64)
        w = self.kernel_ordered[None, :] * self.bridge_weight(r - 1, d[:, None] + self.order[None, :])
        cum = np.cumsum(w, axis=1)
        totals = cum[:, -1]
        if np.any(totals <= 0.0):
            raise SamplerError(f"no closing path for some displacements with {r} steps left")
        u = rng.random(d.shape[0]) * totals
        idx = np.minimum((cum <= u[:, None]).sum(axis=1), len(self.order) - 1)
        return self.order[idx]


@lru_cache(maxsize=64)
def step_distribution(z: float, s_max: Optional[int] = None) -> StepDistribution:
    """Memoized StepDistribution for a slice argument."""
    dist = StepDistribution(z, s_max)
    logger.debug(f"Step distribution z={z:.6g} s_max={dist.s_max} tail={dist.tail_mass:.2e}")
    return dist


def sample_step(
    r: int, d: int, z: float, rng: np.random.Generator, s_max: Optional[int] = None
) -> int:
    """
    Draw the next step of a walk with r steps left and displacement d.

    With r = 1 the step is forced to -d.
    """
    return step_distribution(z, s_max).sample(r, d, rng)


def sample_closed_walk(
    p: int,
    params: ThermoParams,
    start_site: int,
    rng: np.random.Generator,
    s_max: Optional[int] = None,
) -> ClosedWalk:
    """Build a closed walk of p steps starting at start_site."""
    if p < 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    dist = step_distribution(2.0 * params.beta * params.t / p, s_max)
    positions = np.empty(p, dtype=np.int64)
    positions[0] = start_site
    displacement = 0
    for nu in range(p - 1):
        displacement += dist.sample(p - nu, displacement, rng)
        positions[nu + 1] = start_site + displacement
    return ClosedWalk(positions)


def sample_bridges(
    n: int,
    length: int,
    target: int,
    dist: StepDistribution,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Independent bridges of `length` steps from 0 to `target`, one per row.

    Returns:
        (n, length - 1) array of interior positions relative to the start.
    """
    if length < 1:
        raise OrderRangeError(f"bridge length must be >= 1, got {length}")
    out = np.empty((n, length - 1), dtype=np.int64)
    displacement = np.zeros(n, dtype=np.int64)
    for i in range(length - 1):
        displacement += dist.sample_batch(length - i, displacement - target, rng)
        out[:, i] = displacement
    return out


def sample_closed_walks(
    n_walks: int,
    p: int,
    params: ThermoParams,
    rng: np.random.Generator,
    lattice_size: Optional[int] = None,
    s_max: Optional[int] = None,
) -> np.ndarray:
    """
    Independent closed walks, one per row.

    Start sites are uniform on 0..lattice_size-1 when a size is given,
    otherwise every walk starts at 0.
    """
    dist = step_distribution(2.0 * params.beta * params.t / p, s_max)
    if lattice_size:
        starts = rng.integers(0, lattice_size, size=n_walks)
    else:
        starts = np.zeros(n_walks, dtype=np.int64)
    positions = np.empty((n_walks, p), dtype=np.int64)
    positions[:, 0] = starts
    positions[:, 1:] = starts[:, None] + sample_bridges(n_walks, p, 0, dist, rng)
    return positions


def segment_length(segment_fraction: float, p: int) -> int:
    """Number of steps redrawn per proposal: round(f * p), at least 2, at most p."""
    if not 0.0 < segment_fraction <= 1.0:
        raise ParameterError(f"segment fraction must lie in (0, 1], got {segment_fraction}")
    return min(p, max(2, int(round(segment_fraction * p))))


def propose_segment(
    positions: np.ndarray,
    start: int,
    length: int,
    dist: StepDistribution,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Redraw the beads strictly inside a segment of `length` steps.

    Returns:
        Bead indices of the segment interior and their new positions.
    """
    p = positions.shape[0]
    if not 1 <= length <= p:
        raise OrderRangeError(f"segment length must lie in 1..{p}, got {length}")
    start %= p
    anchor = int(positions[start])
    target = 0 if length == p else int(positions[(start + length) % p]) - anchor

    indices = (start + np.arange(1, length)) % p
    new_positions = np.empty(length - 1, dtype=np.int64)
    displacement = 0
    for i in range(length - 1):
        displacement += dist.sample(length - i, displacement - target, rng)
        new_positions[i] = anchor + displacement
    return indices, new_positions


def resample_segment(
    walk: ClosedWalk,
    start: int,
    length: int,
    params: ThermoParams,
    rng: np.random.Generator,
    s_max: Optional[int] = None,
) -> ClosedWalk:
    """Return a copy of walk with `length` steps after bead `start` redrawn."""
    dist = step_distribution(2.0 * params.beta * params.t / walk.p, s_max)
    indices, new_positions = propose_segment(walk.positions, start, length, dist, rng)
    out = walk.copy()
    out.positions[indices] = new_positions
    return out


def ring_polymer_action(walk: ClosedWalk, params: ThermoParams) -> float:
    """Phi = -(1/beta) sum_alpha ln I_{s_alpha}(2 beta t / p)."""
    if params.beta == 0.0:
        raise ParameterError("the ring-polymer action is undefined at beta = 0")
    steps = walk.steps
    table = build_table(params.z, max(2, int(np.abs(steps).max())))
    return float(-np.sum(log_value(steps, table)) / params.beta)


def log_weight(walk: ClosedWalk, params: ThermoParams, lattice: LatticeConfig) -> float:
    """Unnormalized log density sum ln I_s(z) - (beta/p) sum V_j of a walk."""
    steps = walk.steps
    table = build_table(params.z, max(2, int(np.abs(steps).max())))
    potential = float(lattice.potentials[np.mod(walk.positions, lattice.size)].sum())
    return float(np.sum(log_value(steps, table))) - params.beta / params.p * potential


@dataclass
class MetropolisState:
    """Current walk of a chain with its cached occupied-bead count."""
    positions: np.ndarray
    occupied: int
    epsilon: float
    accepted: int = 0
    proposed: int = 0

    @property
    def potential_sum(self) -> float:
        return self.epsilon * self.occupied

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")

    @property
    def walk(self) -> ClosedWalk:
        return ClosedWalk(self.positions.copy())


def occupied_count(lattice: LatticeConfig, positions: np.ndarray) -> int:
    """Number of beads sitting on occupied sites."""
    return int(lattice.occupancy_array[np.mod(positions, lattice.size)].sum())


def _accept(state: MetropolisState, delta: int, params: ThermoParams, rng: np.random.Generator) -> bool:
    """Count a proposal that changes the occupied count by delta and decide it."""
    log_q = -params.beta / params.p * state.epsilon * delta
    state.proposed += 1
    if log_q >= 0.0 or rng.random() < math.exp(log_q):
        state.occupied += delta
        state.accepted += 1
        return True
    return False


def metropolis_step(
    state: MetropolisState,
    lattice: LatticeConfig,
    params: ThermoParams,
    segment_fraction: float,
    rng: np.random.Generator,
    s_max: Optional[int] = None,
) -> bool:
    """
    Propose a bridge segment and accept it with probability min(1, q).

    q = exp(-(beta/p) (V_new - V_old)), summed over the redrawn beads only.
    """
    p = params.p
    dist = step_distribution(params.z, s_max)
    length = segment_length(segment_fraction, p)
    start = int(rng.integers(p))
    indices, new_positions = propose_segment(state.positions, start, length, dist, rng)

    delta = occupied_count(lattice, new_positions) - occupied_count(lattice, state.positions[indices])
    if _accept(state, delta, params, rng):
        state.positions[indices] = new_positions
        return True
    return False


def translate_step(
    state: MetropolisState,
    lattice: LatticeConfig,
    params: ThermoParams,
    rng: np.random.Generator,
) -> bool:
    """
    Shift the whole walk one site left or right.

    The proposal is symmetric and leaves every step unchanged, so only the
    potential enters q.
    """
    shift = 1 if rng.random() < 0.5 else -1
    new_positions = state.positions + shift
    delta = occupied_count(lattice, new_positions) - state.occupied
    if _accept(state, delta, params, rng):
        state.positions = new_positions
        return True
    return False


def refresh_step(
    state: MetropolisState,
    lattice: LatticeConfig,
    params: ThermoParams,
    proposal: np.ndarray,
    rng: np.random.Generator,
) -> bool:
    """
    Independence move to `proposal`, a free closed walk at a uniform start site.

    The proposal is drawn from the free walk measure itself, so q again
    reduces to the potential difference of the two walks.
    """
    if proposal.shape != state.positions.shape:
        raise SamplerError(f"proposal shape {proposal.shape} != walk shape {state.positions.shape}")
    delta = occupied_count(lattice, proposal) - state.occupied
    if _accept(state, delta, params, rng):
        state.positions = np.array(proposal, dtype=np.int64)
        return True
    return False


@dataclass
class MetropolisChain:
    """
    A single Markov chain of closed walks on a lattice.

    The chain starts from a free closed walk at a uniform random site. Each
    step is a whole-walk move with probability global_fraction, split evenly
    between a free refresh and a one-site translation, and a bridge segment
    move otherwise.
    """
    lattice: LatticeConfig
    params: ThermoParams
    segment_fraction: float = config.DEFAULT_SEGMENT_FRACTION
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    s_max: Optional[int] = None
    debug: bool = False
    global_fraction: float = config.DEFAULT_GLOBAL_FRACTION
    state: MetropolisState = field(init=False)
    _proposals: np.ndarray = field(init=False, repr=False)
    _next_proposal: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        segment_length(self.segment_fraction, self.params.p)
        if not 0.0 <= self.global_fraction <= 1.0:
            raise ParameterError(f"global fraction must lie in [0, 1], got {self.global_fraction}")
        start = int(self.rng.integers(self.lattice.size))
        walk = sample_closed_walk(self.params.p, self.params, start, self.rng, self.s_max)
        self.state = MetropolisState(
            walk.positions, occupied_count(self.lattice, walk.positions), self.lattice.epsilon
        )
        self._proposals = np.empty((0, self.params.p), dtype=np.int64)
        self._next_proposal = 0

    @property
    def acceptance_rate(self) -> float:
        return self.state.acceptance_rate

    def _free_proposal(self) -> np.ndarray:
        if self._next_proposal == self._proposals.shape[0]:
            self._proposals = sample_closed_walks(
                config.REFRESH_BATCH, self.params.p, self.params, self.rng, self.lattice.size, self.s_max
            )
            self._next_proposal = 0
        proposal = self._proposals[self._next_proposal]
        self._next_proposal += 1
        return proposal

    def step(self) -> bool:
        u = self.rng.random()
        if u < 0.5 * self.global_fraction:
            accepted = refresh_step(self.state, self.lattice, self.params, self._free_proposal(), self.rng)
        elif u < self.global_fraction:
            accepted = translate_step(self.state, self.lattice, self.params, self.rng)
        else:
            accepted = metropolis_step(
                self.state, self.lattice, self.params, self.segment_fraction, self.rng, self.s_max
            )
        if self.debug and accepted:
            self.check_invariants()
        return accepted

    def check_invariants(self) -> None:
        """Recount the occupied beads and compare with the cached sum."""
        positions = self.state.positions
        if positions.shape[0] != self.params.p:
            raise SamplerError(f"walk length {positions.shape[0]} != p = {self.params.p}")
        if int(np.sum(np.roll(positions, -1) - positions)) != 0:
            raise SamplerError("walk is not closed")
        recount = occupied_count(self.lattice, positions)
        if recount != self.state.occupied:
            raise SamplerError(
                f"cached occupied count {self.state.occupied} differs from recount {recount}"
            )

    def burn_in(self, n_steps: int) -> None:
        for _ in range(n_steps):
            self.step()
        logger.info(
            f"Burn-in of {n_steps} steps done, acceptance {self.acceptance_rate:.4f}"
        )

    def samples(self, n_samples: int, thin: int = 1) -> Iterator[np.ndarray]:
        """Yield a copy of the positions after every `thin` steps."""
        if thin < 1:
            raise ParameterError(f"thin must be >= 1, got {thin}")
        for _ in range(n_samples):
            for _ in range(thin):
                self.step()
            yield self.state.positions.copy()


def run_chain(
    lattice: LatticeConfig,
    params: ThermoParams,
    schedule: SamplerSchedule,
    rng: np.random.Generator,
    debug: bool = False,
) -> Iterator[ClosedWalk]:
    """
    Run burn-in then emit every thin-th walk of a Metropolis chain.

    Args:
        schedule: Sample count, burn-in (None for BURN_IN_PER_BEAD * p),
            thinning, segment fraction and whole-walk move fraction.
    """
    if schedule.n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {schedule.n_samples}")
    chain = MetropolisChain(
        lattice, params, schedule.segment_fraction, rng,
        debug=debug, global_fraction=schedule.global_fraction,
    )
    burn_in = schedule.burn_in if schedule.burn_in is not None else config.BURN_IN_PER_BEAD * params.p
    chain.burn_in(burn_in)
    for positions in chain.samples(schedule.n_samples, schedule.thin):
        yield ClosedWalk(positions)
    logger.info(
        f"Chain finished: {schedule.n_samples} samples, acceptance {chain.acceptance_rate:.4f}"
    )
