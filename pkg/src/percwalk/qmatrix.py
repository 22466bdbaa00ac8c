"""Dense complex matrix helpers and density-operator checks.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The walk
Hilbert space is ordered coin-major: basis index ``c * N + v`` for coin
value ``c`` and vertex index ``v``.
"""

from __future__ import annotations

import numpy as np

from .constants import TOL

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ValidationError(ValueError):
    """A matrix violates a required property (finite, Hermitian, PSD...)."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array, rejecting NaN/Inf."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix contains non-finite entries")
    return arr


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the slow (outer) index."""
    return np.kron(as_matrix(a), as_matrix(b))


def dagger(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def is_hermitian(m, tol: float = TOL.hermitian) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def is_unitary(m, tol: float = TOL.unitary) -> bool:
    m = np.asarray(m)
    eye = np.eye(m.shape[0])
    return bool(np.max(np.abs(dagger(m) @ m - eye), initial=0.0) <= tol)


def hermitian_eigenvalues(m) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in ascending order."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"matrix must be square, got {m.shape}")
    if not is_hermitian(m):
        raise ValidationError("matrix is not Hermitian")
    # symmetrize so rounding noise in the lower triangle is not ignored by LAPACK
    return np.linalg.eigvalsh(0.5 * (m + dagger(m)))


def hermitian_eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and column eigenvectors of a Hermitian matrix."""
    m = as_matrix(m)
    if not is_hermitian(m):
        raise ValidationError("matrix is not Hermitian")
    return np.linalg.eigh(0.5 * (m + dagger(m)))


def check_density(rho, dim: int | None = None) -> np.ndarray:
    """Validate ``rho`` as a density operator and return it as an array.

    Raises :class:`ValidationError` if ``rho`` is not Hermitian, not of
    unit trace, or has an eigenvalue below ``-TOL.psd``.
    """
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"density operator must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ShapeError(f"expected dimension {dim}, got {rho.shape[0]}")
    if not is_hermitian(rho):
        raise ValidationError("density operator is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TOL.trace:
        raise ValidationError(f"density operator trace {tr.real:.3e} != 1")
    lo = hermitian_eigenvalues(rho)[0]
    if lo < -TOL.psd:
        raise ValidationError(f"density operator has negative eigenvalue {lo:.3e}")
    return rho


def is_density(rho, dim: int | None = None) -> bool:
    try:
        check_density(rho, dim)
    except ValueError:
        return False
    return True


def trace_norm(m) -> float:
    return float(np.sum(np.abs(hermitian_eigenvalues(m))))


def trace_distance(rho, sigma) -> float:
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ShapeError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    return 0.5 * trace_norm(rho - sigma)


def partial_trace_position(rho) -> np.ndarray:
    """Trace out the position factor of a coin-major ``C^2 (x) C^N`` operator."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    if rho.shape[1] != d or d % 2:
        raise ShapeError(f"expected an even square dimension, got {rho.shape}")
    n = d // 2
    return np.einsum("ivjv->ij", rho.reshape(2, n, 2, n))


def position_marginal(rho) -> np.ndarray:
    """Diagonal position distribution of a coin-major walker state."""
    rho = as_matrix(rho)
    n = rho.shape[0] // 2
    diag = np.real(np.diagonal(rho)).reshape(2, n)
    return diag.sum(axis=0)


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator from a Ginibre matrix (test and audit helper)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho)
