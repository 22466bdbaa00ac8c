"""Square-lattice geometry, bond-percolation sampling and taxicab zones.

Vertices are indexed ``v = x * side + y``.  Bonds are enumerated vertex by
vertex: the ``+x`` bond (if it exists) followed by the ``+y`` bond, with an
open boundary, so there are ``2 * side * (side - 1)`` of them.

Edge sampling is counter based: the uniform deviate for a bond depends only
on ``(seed, trajectory, step, bond index)``.  Sharding trajectories over
workers therefore cannot change a configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UINT64_MAX = 2**64 - 1

# Philox counter word used to separate independent uses of one (seed, trajectory) key.
STREAM_EDGES = 0
STREAM_NOISE = 1


class LatticeError(ValueError):
    """Invalid lattice or percolation parameters."""


@dataclass(frozen=True)
class LatticeSpec:
    side: int
    x_bond_ids: np.ndarray = field(repr=False, compare=False)
    y_bond_ids: np.ndarray = field(repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.side * self.side

    @property
    def E(self) -> int:
        return 2 * self.side * (self.side - 1)

    @property
    def origin(self) -> tuple[int, int]:
        c = self.side // 2
        return (c, c)

    @property
    def M(self) -> int:
        """Largest zone index, ``floor(sqrt(N) / 2)``."""
        return self.side // 2

    def index(self, x: int, y: int) -> int:
        return x * self.side + y

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(v, self.side)

    def origin_index(self) -> int:
        return self.index(*self.origin)


def build_lattice(side: int) -> LatticeSpec:
    if int(side) != side or side < 2:
        raise LatticeError(f"lattice side must be an integer >= 2, got {side!r}")
    side = int(side)
    xb = np.full((side - 1, side), -1, dtype=np.int64)
    yb = np.full((side, side - 1), -1, dtype=np.int64)
    k = 0
    for x in range(side):
        for y in range(side):
            if x + 1 < side:
                xb[x, y] = k
                k += 1
            if y + 1 < side:
                yb[x, y] = k
                k += 1
    return LatticeSpec(side=side, x_bond_ids=xb, y_bond_ids=yb)


@dataclass(frozen=True)
class PercolationModel:
    lam: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise LatticeError(f"edge-keep probability must lie in [0, 1], got {self.lam}")
        if not 0 <= int(self.seed) <= UINT64_MAX:
            raise LatticeError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class EdgeConfiguration:
    side: int
    present: np.ndarray = field(compare=False)

    def __eq__(self, other):
        if not isinstance(other, EdgeConfiguration):
            return NotImplemented
        return self.side == other.side and np.array_equal(self.present, other.present)

    def __hash__(self):
        return hash((self.side, self.present.tobytes()))

    @property
    def count(self) -> int:
        return int(self.present.sum())

    def x_bonds(self, lattice: LatticeSpec) -> np.ndarray:
        """Bool array ``[x, y]`` for the bond between ``(x, y)`` and ``(x + 1, y)``."""
        self._check(lattice)
        return self.present[lattice.x_bond_ids]

    def y_bonds(self, lattice: LatticeSpec) -> np.ndarray:
        """Bool array ``[x, y]`` for the bond between ``(x, y)`` and ``(x, y + 1)``."""
        self._check(lattice)
        return self.present[lattice.y_bond_ids]

    def _check(self, lattice: LatticeSpec):
        if lattice.side != self.side or self.present.shape != (lattice.E,):
            raise LatticeError("edge configuration does not belong to this lattice")


def full_configuration(lattice: LatticeSpec) -> EdgeConfiguration:
    return EdgeConfiguration(lattice.side, np.ones(lattice.E, dtype=bool))


def empty_configuration(lattice: LatticeSpec) -> EdgeConfiguration:
    return EdgeConfiguration(lattice.side, np.zeros(lattice.E, dtype=bool))


def counter_uniforms(seed: int, trajectory: int, stream: int, step: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) addressed by ``(seed, trajectory, stream, step)``."""
    bitgen = np.random.Philox(key=[int(seed), int(trajectory)], counter=[0, stream, step, 0])
    return np.random.Generator(bitgen).random(count)


def sample_configuration(model: PercolationModel, lattice: LatticeSpec, step: int,
                         trajectory: int = 0) -> EdgeConfiguration:
    """Keep each bond independently with probability ``model.lam``."""
    u = counter_uniforms(model.seed, trajectory, STREAM_EDGES, step, lattice.E)
    return EdgeConfiguration(lattice.side, u < model.lam)


def configuration_weight(config: EdgeConfiguration, lam: float) -> float:
    """Product-Bernoulli probability ``lam^|K| (1 - lam)^(E - |K|)``."""
    k = config.count
    return lam**k * (1.0 - lam) ** (config.present.size - k)


@dataclass(frozen=True)
class ZoneDecomposition:
    """Taxicab shells around the lattice origin.

    ``zone_of[v]`` is the taxicab distance of vertex ``v`` from the origin,
    which may exceed ``M`` for corner vertices.  ``sizes[m]`` counts the
    vertices actually present in shell ``m``; a shell is truncated by the
    boundary when this is below the nominal ``4m``.
    """

    lattice: LatticeSpec
    zone_of: np.ndarray = field(repr=False, compare=False)
    sizes: np.ndarray = field(repr=False, compare=False)

    @property
    def M(self) -> int:
        return self.lattice.M

    @property
    def max_zone(self) -> int:
        return len(self.sizes) - 1

    @staticmethod
    def nominal_size(m: int) -> int:
        return 1 if m == 0 else 4 * m

    def is_complete(self, m: int) -> bool:
        return m <= self.max_zone and self.sizes[m] == self.nominal_size(m)

    def vertices(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.zone_of == m)


def zone_decompose(lattice: LatticeSpec) -> ZoneDecomposition:
    x0, y0 = lattice.origin
    xs, ys = np.divmod(np.arange(lattice.N), lattice.side)
    zone_of = np.abs(xs - x0) + np.abs(ys - y0)
    sizes = np.bincount(zone_of)
    return ZoneDecomposition(lattice=lattice, zone_of=zone_of, sizes=sizes)


def zone_projector(zones: ZoneDecomposition, m: int) -> np.ndarray:
    """Diagonal 0/1 projector on ``C^N`` onto the vertices of zone ``m``."""
    if not 0 <= m <= zones.M:
        raise IndexError(f"zone index {m} outside 0..{zones.M}")
    return np.diag((zones.zone_of == m).astype(np.complex128))


def zone_masses(position_probs: np.ndarray, zones: ZoneDecomposition) -> np.ndarray:
    """Total probability in every shell ``0..max_zone``."""
    return np.bincount(zones.zone_of, weights=np.asarray(position_probs, dtype=float),
                       minlength=zones.max_zone + 1)


def zone_probabilities(position_probs: np.ndarray, zones: ZoneDecomposition) -> np.ndarray:
    """Per-zone probabilities ``P_m = mass_m / 4m`` (``P_0`` = origin mass).

    Shells beyond ``M`` are included so that ``P_0 + sum 4m P_m`` is the full
    position mass.
    """
    mass = zone_masses(position_probs, zones)
    norm = np.array([zones.nominal_size(m) for m in range(mass.size)], dtype=float)
    return mass / norm


def zone_normalization(probs: np.ndarray) -> float:
    """``P_0 + sum_m 4m P_m``."""
    m = np.arange(len(probs))
    weights = np.where(m == 0, 1, 4 * m)
    return float(np.dot(weights, probs))
