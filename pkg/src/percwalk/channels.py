"""Single-qubit Kraus channels acting on the walker's coin.

Both noise models used here are mixtures of unitaries, which the trajectory
engine exploits to sample noise independently of the state:

* phase damping ``{sqrt(1-p) I, sqrt(p)|0><0|, sqrt(p)|1><1|}`` equals
  ``(1 - p/2) rho + (p/2) Z rho Z``;
* bit flip ``{sqrt(1-p) I, sqrt(p) X}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .constants import TOL
from .qmatrix import IDENTITY_2, PAULI_X, PAULI_Z, ShapeError, as_matrix, dagger

NoiseKind = Literal["none", "dephasing", "bitflip"]
NOISE_KINDS = ("none", "dephasing", "bitflip")


class ChannelError(ValueError):
    """Invalid channel parameters or a channel failing completeness."""


@dataclass(frozen=True)
class KrausChannel:
    kraus: tuple[np.ndarray, ...] = field(compare=False)
    label: str = "identity"
    # (weight, unitary) pairs when the channel is a unitary mixture
    mixture: tuple[tuple[float, np.ndarray], ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus)
        if not ops or any(k.shape != (2, 2) for k in ops):
            raise ShapeError("Kraus operators must be a non-empty list of 2x2 matrices")
        object.__setattr__(self, "kraus", ops)
        err = completeness_error(ops)
        if err > TOL.completeness:
            raise ChannelError(f"Kraus operators violate completeness by {err:.3e}")


def completeness_error(kraus) -> float:
    total = sum(dagger(k) @ k for k in kraus)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def _check_prob(p: float, hi: float = 1.0):
    if not 0.0 <= p <= hi:
        raise ChannelError(f"probability must lie in [0, {hi}], got {p}")


def make_identity() -> KrausChannel:
    return KrausChannel((IDENTITY_2,), "identity", ((1.0, IDENTITY_2),))


def make_dephasing(p: float) -> KrausChannel:
    """Phase damping: off-diagonals scale by ``1 - p``, populations fixed."""
    _check_prob(p)
    p0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    p1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
    kraus = (math.sqrt(1 - p) * IDENTITY_2, math.sqrt(p) * p0, math.sqrt(p) * p1)
    return KrausChannel(kraus, "dephasing", ((1 - p / 2, IDENTITY_2), (p / 2, PAULI_Z)))


def make_bitflip(p_flip: float) -> KrausChannel:
    """Bit flip: Bloch ``x`` kept, ``y`` and ``z`` scaled by ``1 - 2 p_flip``."""
    _check_prob(p_flip, 0.5)
    kraus = (math.sqrt(1 - p_flip) * IDENTITY_2, math.sqrt(p_flip) * PAULI_X)
    return KrausChannel(kraus, "bitflip", ((1 - p_flip, IDENTITY_2), (p_flip, PAULI_X)))


@dataclass(frozen=True)
class NoiseSpec:
    """A noise rate ``gamma`` per unit time and the matching per-step probability."""

    kind: NoiseKind = "none"
    gamma: float = 0.0
    dt: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ChannelError(f"unknown noise kind {self.kind!r}")
        if self.gamma < 0:
            raise ChannelError(f"noise rate must be non-negative, got {self.gamma}")
        _check_prob(self.p, 0.5 if self.kind == "bitflip" else 1.0)

    def channel(self) -> KrausChannel:
        if self.kind == "dephasing":
            return make_dephasing(self.p)
        if self.kind == "bitflip":
            return make_bitflip(self.p)
        return make_identity()


NO_NOISE = NoiseSpec()


def calibrate(kind: NoiseKind, gamma: float, dt: float = 1.0) -> NoiseSpec:
    """Per-step probability whose repeated action decays coherences as ``exp(-gamma t)``.

    dephasing: ``p = 1 - exp(-gamma dt)``; bit flip: ``p = (1 - exp(-gamma dt)) / 2``.
    """
    if gamma < 0:
        raise ChannelError(f"noise rate must be non-negative, got {gamma}")
    if dt <= 0:
        raise ChannelError(f"time step must be positive, got {dt}")
    decay = -math.expm1(-gamma * dt)
    if kind == "dephasing":
        p = decay
    elif kind == "bitflip":
        p = decay / 2
    elif kind == "none":
        p = 0.0
    else:
        raise ChannelError(f"unknown noise kind {kind!r}")
    return NoiseSpec(kind=kind, gamma=gamma, dt=dt, p=p)


def apply_channel(ch: KrausChannel, rho) -> np.ndarray:
    """``sum_l K rho K^dagger``; on ``C^2 (x) C^N`` each ``K`` acts as ``K (x) I``."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    if rho.shape[1] != d or d % 2:
        raise ShapeError(f"channel acts on the coin factor; got state shape {rho.shape}")
    if d == 2:
        return sum(k @ rho @ dagger(k) for k in ch.kraus)
    n = d // 2
    blocks = rho.reshape(2, n, 2, n)
    out = np.zeros_like(blocks)
    for k in ch.kraus:
        out += np.einsum("ai,ixjy,bj->axby", k, blocks, k.conj())
    return out.reshape(d, d)
