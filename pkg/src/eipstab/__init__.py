"""Equilibrium-independent transient-stability certificates for lossy networks."""

__version__ = "0.1.0"
