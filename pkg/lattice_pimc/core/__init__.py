"""Lattice model, exact solutions, samplers and estimators."""
