"""
Centralized error hierarchy for the lattice path-integral package.

This module provides a base exception class and specific error types
for the numerical kernels, the samplers and the experiment driver, along
with a helper for turning them into messages the command line can print.
"""
from typing import Optional, Union


class LatticePimcError(Exception):
    """
    Base exception class for all package errors.

    All package-specific exceptions inherit from this class so the CLI can
    catch them in one place and map them to a readable message.
    """
    pass


class BesselDomainError(LatticePimcError):
    """Raised when a Bessel argument is negative or not finite."""
    pass


class OrderRangeError(LatticePimcError):
    """Raised when a Bessel order falls outside a precomputed table."""
    pass


class ParameterError(LatticePimcError):
    """Raised for invalid thermodynamic or sampler parameters."""
    pass


class LatticeConfigError(ParameterError):
    """Raised when a lattice configuration cannot be built."""
    pass


class QuadratureError(LatticePimcError):
    """
    Raised when a quadrature does not reach its tolerance.

    Attributes:
        best_estimate: The last (finest grid) estimate of the integral.
        achieved_tolerance: Relative change between the last two estimates.
    """

    def __init__(
        self,
        message: str,
        best_estimate: float = float("nan"),
        achieved_tolerance: float = float("inf"),
    ):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_tolerance = achieved_tolerance


class SamplerError(LatticePimcError):
    """Raised when a walk cannot be sampled or a chain invariant breaks."""
    pass


class StatisticsError(LatticePimcError):
    """Raised when there is not enough data to form block statistics."""
    pass


class ExperimentConfigError(LatticePimcError):
    """Raised when an experiment configuration is unreadable or invalid."""
    pass


class OutputError(LatticePimcError):
    """Raised when a result file cannot be written."""
    pass


def human_friendly_message(exc: Union[LatticePimcError, Exception]) -> str:
    """
    Convert an exception to a message suitable for the command line.

    Args:
        exc: The exception to convert.

    Returns:
        A short, readable error message.
    """
    detail: Optional[str] = str(exc) or None

    if isinstance(exc, ExperimentConfigError):
        return (
            f"The experiment configuration is invalid: {detail}\n"
            "Check the --config file and the command-line flags."
        )
    elif isinstance(exc, LatticeConfigError):
        return f"The lattice cannot be built: {detail}"
    elif isinstance(exc, ParameterError):
        return f"Invalid parameter: {detail}"
    elif isinstance(exc, QuadratureError):
        return (
            f"A numerical integral did not converge: {detail} "
            f"(best estimate {exc.best_estimate:.12g}, "
            f"achieved relative tolerance {exc.achieved_tolerance:.3g}). "
            "Try a looser --quad-tol."
        )
    elif isinstance(exc, (BesselDomainError, OrderRangeError)):
        return f"Bessel function evaluation failed: {detail}"
    elif isinstance(exc, SamplerError):
        return f"The random-walk sampler failed: {detail}"
    elif isinstance(exc, StatisticsError):
        return (
            f"Not enough samples for error estimation: {detail}\n"
            "Increase --walks or decrease --block-size."
        )
    elif isinstance(exc, OutputError):
        return f"Could not write results: {detail}"
    elif isinstance(exc, LatticePimcError):
        return f"An error occurred: {detail}" if detail else "An unexpected error occurred."

    # Standard Python exceptions
    elif isinstance(exc, PermissionError):
        return "Permission denied. Check that the output directory is writable."
    elif isinstance(exc, FileNotFoundError):
        return f"A required file could not be found: {detail}"
    elif isinstance(exc, ValueError):
        return f"Invalid input: {detail}"

    return f"An error occurred: {detail or 'Unknown error'}"
