"""Path-integral Monte Carlo for a quantum particle on a 1D lattice."""

__version__ = "0.1.0"
