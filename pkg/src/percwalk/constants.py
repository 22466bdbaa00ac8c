"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-8
    eigen_residual: float = 1e-9
    completeness: float = 1e-10
    unitary: float = 1e-10


TOL = Tolerances()
