"""Special functions and quadrature kernels."""
