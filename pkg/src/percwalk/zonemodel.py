"""Reduced coin model: empty-graph operation and zone-ansatz walker states.

On an empty graph the walker cannot move and one step acts on the coin
alone as ``(sigma_x C)^2``, preceded by the noise channel.  Iterating this
map gives the coin state carried by each taxicab zone.

The closed forms track decay with the initial Bloch direction held
fixed, i.e. in a frame co-rotating with ``(sigma_x C)^2``.  Lab-frame
iterates agree with them up to that rotation, so comparisons between the
two use spectra (or undo the rotation explicitly).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import NO_NOISE, NoiseSpec, apply_channel
from .lattice import LatticeSpec, ZoneDecomposition, zone_decompose
from .qmatrix import IDENTITY_2, PAULI_X, PAULI_Y, PAULI_Z, dagger
from .walk import HADAMARD, CoinSpec, empty_graph_coin

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlochCoinState:
    """``a |psi(theta, phi)><psi| + (1 - a) I/2``.

    ``|psi> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``, so the Bloch
    vector is ``a (sin t cos p, sin t sin p, cos t)``.
    """

    a: float = 1.0
    theta: float = math.pi / 2
    phi: float = math.pi / 2

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"mixedness parameter a must lie in [0, 1], got {self.a}")

    def bloch_vector(self) -> np.ndarray:
        t, p = self.theta, self.phi
        return self.a * np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])

    def matrix(self) -> np.ndarray:
        x, y, z = self.bloch_vector()
        return 0.5 * (IDENTITY_2 + x * PAULI_X + y * PAULI_Y + z * PAULI_Z)


def empty_graph_op(coin: CoinSpec, noise: NoiseSpec | None, rho_c) -> np.ndarray:
    """One noisy empty-graph step on the coin: ``R E(rho) R^dagger``, ``R = (sigma_x C)^2``."""
    R = empty_graph_coin(coin)
    ch = (noise or NO_NOISE).channel()
    return R @ apply_channel(ch, rho_c) @ dagger(R)


def empty_graph_iterate(coin: CoinSpec, noise: NoiseSpec | None, rho_c, n: int) -> np.ndarray:
    rho = np.asarray(rho_c, dtype=np.complex128)
    for _ in range(max(n, 0)):
        rho = empty_graph_op(coin, noise, rho)
    return rho


def corotating_frame(coin: CoinSpec, rho_c, n: int) -> np.ndarray:
    """Undo ``n`` empty-graph rotations: ``R^-n rho R^n``."""
    Rn = np.linalg.matrix_power(empty_graph_coin(coin), n)
    return dagger(Rn) @ rho_c @ Rn


def dephasing_closed_form(init: BlochCoinState, gamma: float, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be non-negative")
    a, th, ph = init.a, init.theta, init.phi
    off = a * math.sin(th) * math.exp(-gamma * t)
    return 0.5 * np.array(
        [[1 - a * math.cos(th), off * np.exp(-1j * ph)],
         [off * np.exp(1j * ph), 1 + a * math.cos(th)]],
        dtype=np.complex128,
    )


def bitflip_closed_form(init: BlochCoinState, gamma: float, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be non-negative")
    a, th, ph = init.a, init.theta, init.phi
    e = math.exp(-gamma * t)
    upper = math.cos(ph) - 1j * math.sin(ph) * e
    lower = math.cos(ph) + 1j * math.sin(ph) * e
    return 0.5 * np.array(
        [[1 + a * math.cos(th) * e, a * math.sin(th) * upper],
         [a * math.sin(th) * lower, 1 - a * math.cos(th) * e]],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class ZoneAnsatz:
    """Per-zone walker probabilities and coin states at effective iteration ``n_e = 3m + n``.

    ``probabilities[k]`` is the probability of each single vertex in zone
    ``k`` (zones past the front ``m`` are empty); ``coin_states[k]`` the coin
    state carried there.
    """

    probabilities: np.ndarray
    coin_states: np.ndarray  # (m + 1, 2, 2)
    m: int
    n: int
    lam: float
    zone_sizes: np.ndarray

    @property
    def n_e(self) -> int:
        return 3 * self.m + self.n

    def normalization(self) -> float:
        return float(np.dot(self.zone_sizes[: len(self.probabilities)], self.probabilities))

    def walker_state(self, zones: ZoneDecomposition) -> np.ndarray:
        """Realize the ansatz on ``C^2 (x) C^N`` with diagonal zone projectors."""
        N = zones.lattice.N
        rho = np.zeros((2 * N, 2 * N), dtype=np.complex128)
        for k, (p, rc) in enumerate(zip(self.probabilities, self.coin_states)):
            if p == 0.0:
                continue
            proj = np.diag((zones.zone_of == k).astype(float))
            rho += p * np.kron(rc, proj)
        return rho


def default_zone_profile(lam: float, m: int, sizes: np.ndarray) -> np.ndarray:
    """Per-vertex probabilities ``propto lam^k`` over zones ``0..m``, normalized.

    Reaching zone ``k`` needs ``k`` consecutive kept bonds; this gives a
    profile that is strictly decreasing for ``lam < 1``.
    """
    k = np.arange(m + 1)
    w = np.power(float(lam), k)
    return w / np.dot(sizes[: m + 1], w)


def zone_ansatz_state(init: BlochCoinState, lattice: LatticeSpec, lam: float, m: int, n: int,
                      noise: NoiseSpec | None = None, coin: CoinSpec = HADAMARD,
                      probabilities=None) -> ZoneAnsatz:
    """Zone-ansatz walker with its front in zone ``m`` after ``n_e = 3m + n`` iterations.

    Zone ``k`` below the front mixes the coin states of iterations
    ``n_e - 3(k-1)`` and ``n_e - 3k`` with weights ``lam`` and ``1 - lam``;
    the front zone itself carries ``xi^(n_e - 3m)``.  Negative exponents are
    clamped to zero.  ``probabilities`` (per vertex, zones ``0..m``) default
    to :func:`default_zone_profile`.
    """
    zones = zone_decompose(lattice)
    if not 0 <= m <= lattice.M:
        raise ValueError(f"zone index m={m} outside 0..{lattice.M}")
    if n not in (0, 1, 2):
        raise ValueError(f"iteration index n must be 0, 1 or 2, got {n}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"edge-keep probability must lie in [0, 1], got {lam}")
    if not 0.0 < lam <= 0.5:
        warnings.warn(f"lambda={lam} is outside (0, 1/2], where the zone ansatz is intended",
                      stacklevel=2)
    n_e = 3 * m + n
    rho0 = init.matrix()
    cache: dict[int, np.ndarray] = {}

    def xi(power: int) -> np.ndarray:
        if power < 0:
            log.info("clamping empty-graph exponent %d to 0", power)
            power = 0
        if power not in cache:
            cache[power] = empty_graph_iterate(coin, noise, rho0, power)
        return cache[power]

    coins = [xi(n_e)]
    for k in range(1, m + 1):
        if k == m:
            coins.append(xi(n_e - 3 * k))
        else:
            coins.append(lam * xi(n_e - 3 * (k - 1)) + (1 - lam) * xi(n_e - 3 * k))

    sizes = zones.sizes.astype(float)
    if probabilities is None:
        probs = default_zone_profile(lam, m, sizes)
    else:
        probs = np.asarray(probabilities, dtype=float)
        if probs.shape != (m + 1,):
            raise ValueError(f"expected {m + 1} zone probabilities, got {probs.shape}")
    return ZoneAnsatz(probabilities=probs, coin_states=np.array(coins), m=m, n=n, lam=lam,
                      zone_sizes=sizes)
