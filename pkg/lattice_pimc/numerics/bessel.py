"""
Modified Bessel functions of the first kind, integer order.

Values are stored in the scaled form e^{-z} I_n(z) so that no table
overflows at large arguments. They are produced by a downward (Miller)
recurrence normalized with I_0(z) + 2 sum_{n>=1} I_n(z) = e^z.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from lattice_pimc import config
from lattice_pimc.utils.errors import BesselDomainError, OrderRangeError

logger = logging.getLogger(__name__)

Order = Union[int, np.ndarray]

# Below this argument the leading series term is exact to double precision.
_SMALL_Z = 1e-20
_RESCALE_ABOVE = 1e250
_RESCALE_BY = 1e-250


@dataclass(frozen=True, slots=True)
class BesselTable:
    """Scaled values e^{-z} I_n(z) for n = 0..max_order."""
    z: float
    max_order: int
    scaled_values: np.ndarray

    def scaled(self, n: Order) -> Union[float, np.ndarray]:
        """Look up e^{-z} I_|n|(z); raises OrderRangeError outside the table."""
        idx = np.abs(np.asarray(n, dtype=np.int64))
        if idx.size and int(idx.max()) > self.max_order:
            raise OrderRangeError(
                f"order {int(idx.max())} outside table of max order {self.max_order} (z={self.z})"
            )
        out = self.scaled_values[idx]
        return float(out) if np.ndim(out) == 0 else out


def _validate_arguments(z: np.ndarray) -> None:
    if not np.all(np.isfinite(z)):
        raise BesselDomainError("Bessel argument must be finite")
    if np.any(z < 0):
        raise BesselDomainError(f"Bessel argument must be >= 0, got {float(z.min())}")


def build_tables(zs: Sequence[float], max_order: int) -> np.ndarray:
    """
    Scaled Bessel values for many arguments at once.

    Args:
        zs: Arguments z >= 0.
        max_order: Highest order to return.

    Returns:
        Array of shape (len(zs), max_order + 1) with e^{-z} I_n(z).

    Raises:
        BesselDomainError: If any argument is negative or not finite.
        OrderRangeError: If max_order is negative.
    """
    z = np.atleast_1d(np.asarray(zs, dtype=float)).ravel()
    _validate_arguments(z)
    if max_order < 0:
        raise OrderRangeError(f"max_order must be >= 0, got {max_order}")

    out = np.zeros((z.size, max_order + 1))
    if z.size == 0:
        return out

    out[z == 0.0, 0] = 1.0

    tiny = (z > 0.0) & (z < _SMALL_Z)
    if np.any(tiny):
        zt = z[tiny]
        for n in range(max_order + 1):
            out[tiny, n] = np.exp(n * np.log(zt / 2.0) - math.lgamma(n + 1) - zt)

    mask = z >= _SMALL_Z
    if not np.any(mask):
        return out

    zz = z[mask]
    start = max(max_order, int(math.ceil(float(zz.max())))) + config.MILLER_MARGIN
    values = np.zeros((zz.size, max_order + 1))
    i_next = np.zeros_like(zz)
    i_cur = np.ones_like(zz)
    total = np.zeros_like(zz)

    # i_cur holds I_n and i_next holds I_{n+1} (up to a common factor per argument)
    for n in range(start, 0, -1):
        i_prev = (2.0 * n / zz) * i_cur + i_next
        i_next, i_cur = i_cur, i_prev
        if n <= max_order:
            values[:, n] = i_next
        total += 2.0 * i_next

        big = i_cur > _RESCALE_ABOVE
        if np.any(big):
            i_cur[big] *= _RESCALE_BY
            i_next[big] *= _RESCALE_BY
            total[big] *= _RESCALE_BY
            values[big] *= _RESCALE_BY

    values[:, 0] = i_cur
    total += i_cur
    out[mask] = values / total[:, None]
    return out


def build_table(z: float, max_order: int) -> BesselTable:
    """
    Build the scaled table e^{-z} I_n(z), n = 0..max_order.

    Raises:
        BesselDomainError: For a negative or non-finite argument.
        OrderRangeError: For max_order < 2.
    """
    if max_order < 2:
        raise OrderRangeError(f"max_order must be >= 2, got {max_order}")
    values = build_tables([z], max_order)[0]
    values.setflags(write=False)
    return BesselTable(z=float(z), max_order=int(max_order), scaled_values=values)


@lru_cache(maxsize=256)
def cached_table(z: float, max_order: int) -> BesselTable:
    """Memoized build_table; one table serves every walk of a run."""
    logger.debug(f"Building Bessel table z={z:.6g} max_order={max_order}")
    return build_table(z, max_order)


def ratio(n: Order, m: Order, table: BesselTable) -> Union[float, np.ndarray]:
    """I_n(z) / I_m(z) from scaled values."""
    return np.divide(table.scaled(n), table.scaled(m))


def dlog1(n: Order, table: BesselTable) -> Union[float, np.ndarray]:
    """I'_n(z) / I_n(z) = (I_{n-1} + I_{n+1}) / (2 I_n)."""
    n = np.abs(np.asarray(n, dtype=np.int64))
    result = (table.scaled(np.abs(n - 1)) + table.scaled(n + 1)) / (2.0 * table.scaled(n))
    return float(result) if np.ndim(result) == 0 else result


def dlog2(n: Order, table: BesselTable) -> Union[float, np.ndarray]:
    """I''_n(z) / I_n(z) = (I_{n-2} + 2 I_n + I_{n+2}) / (4 I_n)."""
    n = np.abs(np.asarray(n, dtype=np.int64))
    center = table.scaled(n)
    result = (table.scaled(np.abs(n - 2)) + 2.0 * center + table.scaled(n + 2)) / (4.0 * center)
    return float(result) if np.ndim(result) == 0 else result


def log_value(n: Order, table: BesselTable) -> Union[float, np.ndarray]:
    """ln I_n(z); -inf where the value underflows."""
    with np.errstate(divide="ignore"):
        result = np.log(table.scaled(n)) + table.z
    return float(result) if np.ndim(result) == 0 else result


@lru_cache(maxsize=256)
def step_cutoff(
    z: float,
    tail_tol: float = config.BESSEL_TAIL_TOL,
    minimum: int = config.MIN_STEP_CUTOFF,
) -> int:
    """
    Smallest step cutoff S >= minimum whose neglected mass is below tail_tol.

    The neglected mass is 2 * sum_{s > S} e^{-z} I_s(z).
    """
    if not math.isfinite(z) or z < 0:
        raise BesselDomainError(f"Bessel argument must be finite and >= 0, got {z}")
    order = int(math.ceil(z + 12.0 * math.sqrt(z) + 40.0)) + minimum
    values = build_tables([z], order)[0]
    # tails[S] = 2 * sum_{s > S} values[s]
    tails = 2.0 * np.concatenate([np.cumsum(values[::-1])[::-1][1:], [0.0]])
    for s in range(minimum, order + 1):
        if tails[s] < tail_tol:
            return s
    raise OrderRangeError(f"no step cutoff below order {order} for z={z}")
