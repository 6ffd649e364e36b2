"""Experiment commands and result files."""
