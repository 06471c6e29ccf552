"""Weighted ergodic averages along Kronecker sequences."""

__version__ = "0.1.0"
