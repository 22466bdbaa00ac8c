"""Quantum walks on a dynamically percolated square lattice under coin noise."""

__version__ = "0.1.0"
