"""Quantum-assisted variational Monte Carlo at desk scale."""

__version__ = "0.1.0"
