"""Walk engine: coin, percolated shifts, exact and Monte Carlo evolution.

One step on edge configuration ``K`` with noise channel ``E`` is

    rho -> U_K E(rho) U_K^dagger,   U_K = S_K^y (C (x) I) S_K^x (C (x) I)

and the percolated step averages this over ``K`` with the product
Bernoulli weights.  A coin value of 0 moves the walker one site in the
positive direction, 1 in the negative direction; when the needed bond is
absent (or leaves the lattice) the walker stays and its coin is flipped.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .channels import NO_NOISE, KrausChannel, NoiseSpec
from .lattice import (
    STREAM_EDGES,
    STREAM_NOISE,
    EdgeConfiguration,
    LatticeError,
    LatticeSpec,
    configuration_weight,
    counter_uniforms,
)
from .qmatrix import PAULI_X, ShapeError, as_matrix, dagger, hermitian_eigh

log = logging.getLogger(__name__)

EXACT_MAX_EDGES = 16


@dataclass(frozen=True)
class CoinSpec:
    alpha: float = math.pi / 2
    beta: float = math.pi / 4


HADAMARD = CoinSpec(math.pi / 2, math.pi / 4)


def coin_operator(spec: CoinSpec) -> np.ndarray:
    a, b = spec.alpha, spec.beta
    s, c = math.sin(b), math.cos(b)
    return np.array(
        [[1j * np.exp(-1j * a) * s, c], [c, 1j * np.exp(1j * a) * s]],
        dtype=np.complex128,
    )


def initial_state(lattice: LatticeSpec, coin_rho) -> np.ndarray:
    """``rho_c (x) |origin><origin|`` in the coin-major basis."""
    pos = np.zeros((lattice.N, lattice.N), dtype=np.complex128)
    o = lattice.origin_index()
    pos[o, o] = 1.0
    return np.kron(as_matrix(coin_rho), pos)


def build_shift(axis: str, config: EdgeConfiguration, lattice: LatticeSpec) -> np.ndarray:
    """Dense ``2N x 2N`` conditional shift along ``axis`` ("x" or "y")."""
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    bonds = config.x_bonds(lattice) if axis == "x" else config.y_bonds(lattice)
    L, N = lattice.side, lattice.N
    S = np.zeros((2 * N, 2 * N), dtype=np.complex128)
    for x, y in itertools.product(range(L), range(L)):
        v = lattice.index(x, y)
        along = x if axis == "x" else y
        for c, delta in ((0, 1), (1, -1)):
            to = along + delta
            # bond between `along` and `to` is indexed by the smaller of the two
            ok = 0 <= to < L and bool(bonds[(min(along, to), y) if axis == "x" else (x, min(along, to))])
            if ok:
                w = lattice.index(to, y) if axis == "x" else lattice.index(x, to)
                S[c * N + w, c * N + v] = 1.0
            else:
                S[(1 - c) * N + v, c * N + v] = 1.0
    return S


def step_unitary(config: EdgeConfiguration, coin: CoinSpec, lattice: LatticeSpec) -> np.ndarray:
    """``S^y (C (x) I) S^x (C (x) I)`` for one edge configuration."""
    cI = np.kron(coin_operator(coin), np.eye(lattice.N))
    return build_shift("y", config, lattice) @ cI @ build_shift("x", config, lattice) @ cI


def empty_graph_coin(coin: CoinSpec) -> np.ndarray:
    """Coin-only action of one step on the empty graph, ``(sigma_x C)^2``."""
    m = PAULI_X @ coin_operator(coin)
    return m @ m


def _noise_channel(noise) -> KrausChannel:
    if noise is None:
        return NO_NOISE.channel()
    if isinstance(noise, KrausChannel):
        return noise
    if isinstance(noise, NoiseSpec):
        return noise.channel()
    raise TypeError(f"unsupported noise description {noise!r}")


def _check_walker(rho, lattice: LatticeSpec) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (2 * lattice.N, 2 * lattice.N):
        raise ShapeError(f"walker state must be {2 * lattice.N}x{2 * lattice.N}, got {rho.shape}")
    return rho


def _apply_coin_channel(kraus, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    n = d // 2
    blocks = rho.reshape(2, n, 2, n)
    out = np.zeros_like(blocks)
    for k in kraus:
        out += np.einsum("ai,ixjy,bj->axby", k, blocks, k.conj())
    return out.reshape(d, d)


def all_configurations(lattice: LatticeSpec) -> Iterator[EdgeConfiguration]:
    for bits in itertools.product((False, True), repeat=lattice.E):
        yield EdgeConfiguration(lattice.side, np.array(bits, dtype=bool))


def percolation_superoperator_terms(lattice: LatticeSpec, lam: float, coin: CoinSpec):
    """``(weights, unitaries)`` for every configuration with nonzero weight."""
    if lattice.E > EXACT_MAX_EDGES:
        raise LatticeError(
            f"exact evolution enumerates 2^{lattice.E} configurations; "
            f"only lattices with at most {EXACT_MAX_EDGES} bonds are supported"
        )
    weights, unitaries = [], []
    for config in all_configurations(lattice):
        w = configuration_weight(config, lam)
        if w > 0.0:
            weights.append(w)
            unitaries.append(step_unitary(config, coin, lattice))
    return np.array(weights), np.array(unitaries)


def evolve_exact(rho0, steps: int, lam: float, coin: CoinSpec, noise, lattice: LatticeSpec,
                 observer: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Exact percolated, noisy evolution by enumerating every configuration.

    Only usable on tiny lattices (``E <= 16``); this is the reference the
    Monte Carlo engine is checked against.  ``observer(step, rho)`` is called
    for ``step = 0..steps``.
    """
    rho = _check_walker(rho0, lattice)
    if not 0.0 <= lam <= 1.0:
        raise LatticeError(f"edge-keep probability must lie in [0, 1], got {lam}")
    weights, unitaries = percolation_superoperator_terms(lattice, lam, coin)
    udag = np.conj(np.swapaxes(unitaries, 1, 2))
    kraus = _noise_channel(noise).kraus
    if observer:
        observer(0, rho)
    for s in range(1, steps + 1):
        rho = _apply_coin_channel(kraus, rho)
        rho = np.einsum("k,kij,jl,klm->im", weights, unitaries, rho, udag, optimize=True)
        if observer:
            observer(s, rho)
    return rho


# --- bond-factorized exact average -------------------------------------------


def _bond_blocks(lattice: LatticeSpec, axis: str) -> tuple[np.ndarray, ...]:
    """Index arrays ``(i0, i1, o0, o1)`` of the 2-dim block each bond acts on.

    A bond maps ``span{|0,u>, |1,w>}`` onto ``span{|0,w>, |1,u>}`` (``w`` is
    ``u`` moved one site along ``axis``): as the identity when present and as
    a coin flip when absent.
    """
    L, N = lattice.side, lattice.N
    a, b = np.meshgrid(np.arange(L - 1), np.arange(L), indexing="ij")
    if axis == "x":
        u, w = a * L + b, (a + 1) * L + b
    else:
        u, w = b * L + a, b * L + a + 1
    u, w = u.ravel(), w.ravel()
    return u, N + w, w, N + u


def _bond_average(sigma: np.ndarray, s_mean, blocks) -> np.ndarray:
    """Exact average of ``S_K sigma S_K^dagger`` over independent bonds.

    With ``S = sum_b S_b`` on disjoint blocks, the average is
    ``S_mean sigma S_mean^dagger + lam (1 - lam) sum_b D_b sigma D_b^dagger``
    where ``D_b = present_b - absent_b``; ``s_mean`` carries ``lam`` already and
    the correction is passed in pre-scaled via ``blocks``.
    """
    (i0, i1, o0, o1), scale = blocks
    out = (s_mean @ (s_mean @ sigma).conj().T).conj().T
    if scale:
        c = scale * (sigma[i0, i0] + sigma[i1, i1] - 2.0 * sigma[i0, i1].real)
        out[o0, o0] += c
        out[o1, o1] += c
        out[o0, o1] -= c
        out[o1, o0] -= c
    return out


def evolve_factorized(rho0, steps: int, lam: float, coin: CoinSpec, noise, lattice: LatticeSpec,
                      observer: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Exact percolated evolution without enumerating configurations.

    Bonds are independent and each acts on its own 2-dim block, so the
    configuration average of a shift factorizes bond by bond.  Cost is a few
    sparse-dense products per step, which makes lattices up to the dense
    memory cap tractable.
    """
    from scipy import sparse

    rho = _check_walker(rho0, lattice)
    if not 0.0 <= lam <= 1.0:
        raise LatticeError(f"edge-keep probability must lie in [0, 1], got {lam}")
    from .lattice import empty_configuration, full_configuration

    full, empty = full_configuration(lattice), empty_configuration(lattice)
    coin_layer = sparse.csr_matrix(np.kron(coin_operator(coin), np.eye(lattice.N)))
    layers = []
    for axis in ("x", "y"):
        s_mean = sparse.csr_matrix(lam * build_shift(axis, full, lattice)
                                   + (1.0 - lam) * build_shift(axis, empty, lattice))
        layers.append((s_mean, (_bond_blocks(lattice, axis), lam * (1.0 - lam))))
    kraus = _noise_channel(noise).kraus
    if observer:
        observer(0, rho)
    for s in range(1, steps + 1):
        rho = _apply_coin_channel(kraus, rho)
        for s_mean, blocks in layers:
            rho = (coin_layer @ (coin_layer @ rho).conj().T).conj().T
            rho = _bond_average(rho, s_mean, blocks)
        if observer:
            observer(s, rho)
    return rho


# --- trajectory engine -------------------------------------------------------


def _shift_x(psi: np.ndarray, bonds: np.ndarray) -> np.ndarray:
    """Conditional shift along the second-to-last axis.

    ``psi``: ``(..., 2, L, L)``; ``bonds``: ``(..., L-1, L)`` bool, broadcast
    against the leading axes of ``psi`` with the coin axis removed.
    """
    p0, p1 = psi[..., 0, :, :], psi[..., 1, :, :]
    zero = np.zeros((), dtype=psi.dtype)
    pad = np.zeros(bonds.shape[:-2] + (1, bonds.shape[-1]), dtype=bool)
    right = np.concatenate([bonds, pad], axis=-2)  # bond to x+1
    left = np.concatenate([pad, bonds], axis=-2)  # bond to x-1
    new0 = np.where(left, zero, p1)
    new1 = np.where(right, zero, p0)
    new0[..., 1:, :] += np.where(bonds, p0[..., :-1, :], zero)
    new1[..., :-1, :] += np.where(bonds, p1[..., 1:, :], zero)
    return np.stack([new0, new1], axis=-3)


def _shift_y(psi: np.ndarray, bonds: np.ndarray) -> np.ndarray:
    return _shift_x(psi.swapaxes(-1, -2), bonds.swapaxes(-1, -2)).swapaxes(-1, -2)


def _apply_coin(op: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("ij,...jxy->...ixy", op, psi)


def _decompose(rho: np.ndarray, cutoff: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = hermitian_eigh(rho)
    keep = vals > cutoff
    w = vals[keep]
    return w / w.sum(), vecs[:, keep].T


# trajectories carry full density matrices (noise averaged exactly) up to this dimension
DENSITY_PATH_MAX_DIM = 64


@dataclass
class _TrajectoryEngine:
    """Per-trajectory evolution for a batch of trajectory ids.

    ``representation`` is ``"pure"`` (state vectors, noise unravelled by
    Kraus-index sampling) or ``"density"`` (density matrices, noise channel
    applied exactly, only configurations sampled).
    """

    lattice: LatticeSpec
    coin: np.ndarray
    channel: KrausChannel
    lam: float
    seed: int
    representation: str
    rho0: np.ndarray
    weights: np.ndarray  # pure path: (r,) mixture weights of rho0
    components: np.ndarray  # pure path: (r, 2, L, L)

    def configs(self, traj_ids: np.ndarray, step: int) -> tuple[np.ndarray, np.ndarray]:
        lat = self.lattice
        if self.lam in (0.0, 1.0):
            present = np.full((len(traj_ids), lat.E), self.lam == 1.0)
        else:
            present = np.stack([
                counter_uniforms(self.seed, t, STREAM_EDGES, step, lat.E) < self.lam for t in traj_ids
            ])
        return present[:, lat.x_bond_ids], present[:, lat.y_bond_ids]

    def _sample_noise(self, traj_ids: np.ndarray, step: int, psi: np.ndarray) -> np.ndarray:
        ch = self.channel
        if ch.label == "identity":
            return psi
        r = psi.shape[1]
        u = np.stack([counter_uniforms(self.seed, t, STREAM_NOISE, step, r) for t in traj_ids])
        if ch.mixture is not None:
            w = np.array([m[0] for m in ch.mixture])
            ops = np.array([m[1] for m in ch.mixture])
            idx = np.minimum(np.searchsorted(np.cumsum(w), u[:, 0], side="right"), len(w) - 1)
            return np.einsum("bij,brjxy->brixy", ops[idx], psi)
        # state-dependent Kraus sampling, one draw per component
        branches = np.array([_apply_coin(k, psi) for k in ch.kraus])  # (l, b, r, 2, L, L)
        probs = np.sum(np.abs(branches) ** 2, axis=(-3, -2, -1))  # (l, b, r)
        cum = np.cumsum(probs, axis=0) / probs.sum(axis=0)
        idx = np.minimum((u[None] >= cum).sum(axis=0), len(ch.kraus) - 1)  # (b, r)
        b_ix, r_ix = np.indices(idx.shape)
        chosen = branches[idx, b_ix, r_ix]
        return chosen / np.sqrt(probs[idx, b_ix, r_ix])[..., None, None, None]

    def _unitary_rows(self, states: np.ndarray, bx: np.ndarray, by: np.ndarray) -> np.ndarray:
        """Apply ``U_K`` to states stored along the last three axes ``(2, L, L)``."""
        states = _shift_x(_apply_coin(self.coin, states), bx)
        return _shift_y(_apply_coin(self.coin, states), by)

    def run(self, traj_ids: np.ndarray, steps: int) -> Iterator[tuple[int, np.ndarray]]:
        B, L, d = len(traj_ids), self.lattice.side, 2 * self.lattice.N
        if self.representation == "pure":
            state = np.broadcast_to(self.components, (B,) + self.components.shape).copy()
        else:
            state = np.broadcast_to(self.rho0, (B, d, d)).copy()
        yield 0, state
        for s in range(steps):
            bx, by = self.configs(traj_ids, s)
            bx, by = bx[:, None], by[:, None]
            if self.representation == "pure":
                state = self._unitary_rows(self._sample_noise(traj_ids, s, state), bx, by)
            else:
                rho = np.stack([_apply_coin_channel(self.channel.kraus, r) for r in state])
                # rows of rho^T are the columns of rho: U rho U^dag = conj(U conj(U rho)^T ...)
                y = self._unitary_rows(rho.swapaxes(1, 2).reshape(B, d, 2, L, L), bx, by)
                z = y.reshape(B, d, d).conj().swapaxes(1, 2)
                w = self._unitary_rows(z.reshape(B, d, 2, L, L), bx, by)
                state = w.reshape(B, d, d).conj()
            yield s + 1, state

    # reductions of a batch state to per-trajectory quantities
    def full(self, state: np.ndarray) -> np.ndarray:
        if self.representation == "density":
            return state
        d = 2 * self.lattice.N
        flat = state.reshape(state.shape[0], len(self.weights), d)
        return np.einsum("r,bri,brj->bij", self.weights, flat, flat.conj())

    def position(self, state: np.ndarray) -> np.ndarray:
        N = self.lattice.N
        if self.representation == "density":
            diag = np.real(np.diagonal(state, axis1=1, axis2=2))
            return diag.reshape(-1, 2, N).sum(axis=1)
        flat = state.reshape(state.shape[0], len(self.weights), 2, N)
        return np.einsum("r,brcv->bv", self.weights, np.abs(flat) ** 2)

    def coin_state(self, state: np.ndarray) -> np.ndarray:
        N = self.lattice.N
        if self.representation == "density":
            return np.einsum("bivjv->bij", state.reshape(-1, 2, N, 2, N))
        flat = state.reshape(state.shape[0], len(self.weights), 2, N)
        return np.einsum("r,briv,brjv->bij", self.weights, flat, flat.conj())


REPRESENTATIONS = ("auto", "pure", "density")


def _make_engine(rho0, lam, coin, noise, lattice, seed, representation) -> _TrajectoryEngine:
    rho = _check_walker(rho0, lattice)
    if not 0.0 <= lam <= 1.0:
        raise LatticeError(f"edge-keep probability must lie in [0, 1], got {lam}")
    if representation not in REPRESENTATIONS:
        raise ValueError(f"representation must be one of {REPRESENTATIONS}")
    d = 2 * lattice.N
    if representation == "auto":
        representation = "density" if d <= DENSITY_PATH_MAX_DIM else "pure"
    w, vecs = _decompose(rho)
    L = lattice.side
    return _TrajectoryEngine(lattice, coin_operator(coin), _noise_channel(noise), float(lam), int(seed),
                             representation, rho, w, vecs.reshape(len(w), 2, L, L))


def _batches(trajectories: int, batch_size: int) -> list[np.ndarray]:
    ids = np.arange(trajectories)
    return [ids[i:i + batch_size] for i in range(0, trajectories, batch_size)]


def _default_batch(per_traj_values: int) -> int:
    return int(max(1, min(512, 2**22 // max(per_traj_values, 1))))


def _map_batches(fn, batches, workers: int):
    if workers <= 1:
        return [fn(b) for b in batches]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, batches))


@dataclass(frozen=True)
class MonteCarloResult:
    rho: np.ndarray
    stderr: np.ndarray  # per entry: sqrt(var(Re) + var(Im)) / sqrt(T)
    trajectories: int
    representation: str


def evolve_monte_carlo(rho0, steps: int, lam: float, coin: CoinSpec, noise, lattice: LatticeSpec,
                       trajectories: int, seed: int = 0, workers: int = 1,
                       representation: str = "auto", batch_size: int | None = None) -> MonteCarloResult:
    """Unbiased trajectory estimate of the percolated, noisy evolution.

    Each trajectory draws its configuration sequence (and, on the pure
    path, its noise branches) from counter-based streams keyed by
    ``(seed, trajectory)``.  Batches are fixed by ``batch_size`` and summed
    in order, so ``workers`` never changes the result.
    """
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    eng = _make_engine(rho0, lam, coin, noise, lattice, seed, representation)
    d = 2 * lattice.N
    if batch_size is None:
        batch_size = _default_batch(4 * d * d)

    def one(ids):
        for _, state in eng.run(ids, steps):
            pass
        x = eng.full(state)
        return x.sum(axis=0), (x.real**2).sum(axis=0), (x.imag**2).sum(axis=0)

    parts = _map_batches(one, _batches(trajectories, batch_size), workers)
    total, sq_re, sq_im = (np.sum([p[i] for p in parts], axis=0) for i in range(3))
    T = trajectories
    mean = total / T
    if T > 1:
        var = (sq_re - T * mean.real**2 + sq_im - T * mean.imag**2) / (T - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / T)
    else:
        stderr = np.full(mean.shape, np.nan)
    return MonteCarloResult(rho=mean, stderr=stderr, trajectories=T, representation=eng.representation)


@dataclass(frozen=True)
class Observables:
    """Per-step position distribution and reduced coin state."""

    position: np.ndarray  # (steps + 1, N)
    coin: np.ndarray  # (steps + 1, 2, 2)


def _observe_dense(evolve, rho0, steps, lam, coin, noise, lattice) -> Observables:
    N = lattice.N
    pos = np.zeros((steps + 1, N))
    cn = np.zeros((steps + 1, 2, 2), dtype=np.complex128)

    def record(s, rho):
        blocks = rho.reshape(2, N, 2, N)
        pos[s] = np.real(np.einsum("cvcv->v", blocks))
        cn[s] = np.einsum("ivjv->ij", blocks)

    evolve(rho0, steps, lam, coin, noise, lattice, observer=record)
    return Observables(pos, cn)


def observe_exact(rho0, steps, lam, coin, noise, lattice) -> Observables:
    return _observe_dense(evolve_exact, rho0, steps, lam, coin, noise, lattice)


def observe_factorized(rho0, steps, lam, coin, noise, lattice) -> Observables:
    return _observe_dense(evolve_factorized, rho0, steps, lam, coin, noise, lattice)


def observe_monte_carlo(rho0, steps, lam, coin, noise, lattice, trajectories, seed=0,
                        workers: int = 1, representation: str = "auto",
                        batch_size: int | None = None) -> Observables:
    """Trajectory average of the per-step position distribution and coin state."""
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    eng = _make_engine(rho0, lam, coin, noise, lattice, seed, representation)
    N = lattice.N
    if batch_size is None:
        per = 4 * N * N if eng.representation == "density" else 8 * len(eng.weights) * N
        batch_size = _default_batch(per)

    def one(ids):
        pos = np.zeros((steps + 1, N))
        cn = np.zeros((steps + 1, 2, 2), dtype=np.complex128)
        for s, state in eng.run(ids, steps):
            pos[s] = eng.position(state).sum(axis=0)
            cn[s] = eng.coin_state(state).sum(axis=0)
        return pos, cn

    parts = _map_batches(one, _batches(trajectories, batch_size), workers)
    pos = np.sum([p[0] for p in parts], axis=0) / trajectories
    cn = np.sum([p[1] for p in parts], axis=0) / trajectories
    return Observables(pos, cn)


def noisy_step(rho, config: EdgeConfiguration, coin: CoinSpec, noise, lattice: LatticeSpec) -> np.ndarray:
    """One step on a single, fixed configuration: ``U_K E(rho) U_K^dagger``."""
    rho = _check_walker(rho, lattice)
    U = step_unitary(config, coin, lattice)
    return U @ _apply_coin_channel(_noise_channel(noise).kraus, rho) @ dagger(U)
