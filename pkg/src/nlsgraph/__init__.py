"""Spectral computations for linearized NLS on star graphs."""
