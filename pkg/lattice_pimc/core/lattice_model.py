"""
Lattice construction and periodic potential lookup.

Sites are indexed 0..L-1 with periodic boundaries. In the striped pattern
the odd sites are occupied by quenched atoms and carry the potential
epsilon.
"""
from typing import Optional, Sequence, Union

import numpy as np

from lattice_pimc.models import LatticeConfig
from lattice_pimc.utils.errors import LatticeConfigError

PATTERNS = ("free", "striped", "explicit")


def make_striped(size: int, epsilon: float) -> LatticeConfig:
    """
    Build the alternating lattice: empty even sites, occupied odd sites.

    Raises:
        LatticeConfigError: If size is odd or smaller than 2.
    """
    if size < 2 or size % 2 != 0:
        raise LatticeConfigError(f"striped lattice needs an even length >= 2, got {size}")
    return LatticeConfig(occupancy=tuple(j % 2 for j in range(size)), epsilon=epsilon)


def make_free(size: int) -> LatticeConfig:
    """Build a lattice with no atoms."""
    if size < 1:
        raise LatticeConfigError(f"lattice length must be >= 1, got {size}")
    return LatticeConfig(occupancy=(0,) * size, epsilon=0.0)


def make_explicit(occupancy: Sequence[int], epsilon: float) -> LatticeConfig:
    """Build a lattice from an explicit occupancy list."""
    return LatticeConfig(occupancy=tuple(occupancy), epsilon=epsilon)


def from_spec(
    pattern: str,
    size: int,
    epsilon: float,
    occupancy: Optional[Sequence[int]] = None,
) -> LatticeConfig:
    """
    Factory used by the experiment configuration.

    Args:
        pattern: One of "free", "striped" or "explicit".
        size: Number of sites (ignored for explicit lattices).
        epsilon: On-site potential of occupied sites.
        occupancy: Site occupancies for the explicit pattern.
    """
    pattern = pattern.strip().lower()
    if pattern == "free":
        return make_free(size)
    if pattern == "striped":
        return make_striped(size, epsilon)
    if pattern == "explicit":
        if not occupancy:
            raise LatticeConfigError("explicit pattern requires an occupancy list")
        return make_explicit(occupancy, epsilon)
    raise LatticeConfigError(f"unknown lattice pattern {pattern!r}; expected one of {PATTERNS}")


def potential_at(
    lattice: LatticeConfig, j: Union[int, np.ndarray]
) -> Union[float, np.ndarray]:
    """epsilon * n_{j mod L}; j may be negative or an integer array."""
    result = lattice.potentials[np.mod(j, lattice.size)]
    return float(result) if np.ndim(result) == 0 else result


def occupancy_at(
    lattice: LatticeConfig, j: Union[int, np.ndarray]
) -> Union[int, np.ndarray]:
    """n_{j mod L} for scalar or array j."""
    result = lattice.occupancy_array[np.mod(j, lattice.size)]
    return int(result) if np.ndim(result) == 0 else result
