"""Trace-distance bounds, Bloch averages, tunable rates and mixing times.

Two exponential conventions appear in the closed forms: continuous decay
``exp(-2 gamma t)`` and per-step decay ``(1 - 2 gamma)^t``.  They agree to
first order in ``gamma``.  Every function that involves the decay takes a
``convention`` argument so evolutions and their inverses can be paired
consistently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import simpson

Convention = Literal["continuous", "per-step"]
CONVENTIONS = ("continuous", "per-step")

THETA_PANELS = 2048
BLOCH_PANELS = 512


class DomainError(ValueError):
    """Arguments outside the domain where a closed form is defined."""


class UnreachableTargetError(DomainError):
    """A target trace distance lies outside what the evolution can reach."""


class SingularLimitWarning(UserWarning):
    """A removable singularity was evaluated by its limit."""


@dataclass(frozen=True)
class AnalysisParams:
    """Lattice size and closeness parameters used by the analytic bounds.

    ``M`` defaults to ``floor(sqrt(N) / 2)``; ``delta_dep`` to
    ``1 / (2 N sqrt N)`` and ``delta_bit`` to ``1 / N``.
    """

    N: int
    M: int | None = None
    delta_dep: float | None = None
    delta_bit: float | None = None

    def __post_init__(self):
        if self.N < 4:
            raise ValueError(f"vertex count must be >= 4, got {self.N}")
        if self.M is None:
            object.__setattr__(self, "M", int(math.isqrt(self.N) // 2))
        if self.delta_dep is None:
            object.__setattr__(self, "delta_dep", 1.0 / (2 * self.N * math.sqrt(self.N)))
        if self.delta_bit is None:
            object.__setattr__(self, "delta_bit", 1.0 / self.N)

    @property
    def P_u(self) -> float:
        return 2.0 / self.N


@dataclass(frozen=True)
class DistanceCurve:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t, v = np.asarray(self.times, float), np.asarray(self.values, float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def _decay(gamma: float, t, convention: Convention):
    """``exp(-2 gamma t)`` or ``(1 - 2 gamma)^t``."""
    if convention == "continuous":
        return np.exp(-2.0 * gamma * np.asarray(t, float))
    if convention == "per-step":
        if not 0 <= gamma < 0.5:
            raise ValueError("per-step convention needs 0 <= gamma < 1/2")
        return np.power(1.0 - 2.0 * gamma, np.asarray(t, float))
    raise ValueError(f"unknown convention {convention!r}")


def _as_output(x):
    return float(x) if np.ndim(x) == 0 else x


# --- f(M, gamma) --------------------------------------------------------------


def f_dep(M: int, gamma: float) -> float:
    """``e^{-6g} (1 - e^{-3Mg}) / (1 - e^{-6g})``; ``M/2`` at ``g = 0``."""
    if gamma < 0:
        raise ValueError("rate must be non-negative")
    if gamma == 0:
        warnings.warn("f_dep evaluated at gamma=0 by its limit M/2", SingularLimitWarning, stacklevel=2)
        return M / 2.0
    if math.isinf(gamma):
        return 0.0
    return math.exp(-6 * gamma) * math.expm1(-3 * M * gamma) / math.expm1(-6 * gamma)


def f_bit(M: int, gamma: float) -> float:
    """``e^{-6g} (1 + e^{-3g})^2 (1 - e^{-3Mg}) / (2 (1 - e^{-6g}))``; ``M`` at ``g = 0``."""
    if gamma < 0:
        raise ValueError("rate must be non-negative")
    if gamma == 0:
        warnings.warn("f_bit evaluated at gamma=0 by its limit M", SingularLimitWarning, stacklevel=2)
        return float(M)
    if math.isinf(gamma):
        return 0.0
    return (math.exp(-6 * gamma) * (1 + math.exp(-3 * gamma)) ** 2
            * math.expm1(-3 * M * gamma) / (2 * math.expm1(-6 * gamma)))


# --- Bloch averages ------------------------------------------------------------


def initial_distance(a: float, N: int, theta=0.0):
    """``0.5 sqrt(((1 - 1/N) + a cos theta)^2 + a^2)``; may exceed 1 (it is a bound)."""
    return 0.5 * np.sqrt(((1.0 - 1.0 / N) + a * np.cos(theta)) ** 2 + a * a)


def avg_distance_theta(a: float, N: int, panels: int = THETA_PANELS) -> float:
    """Average of :func:`initial_distance` over ``theta in [-pi, pi]`` by Simpson's 1/3 rule."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    if N < 4:
        raise ValueError(f"N must be >= 4, got {N}")
    if panels < 2 or panels % 2:
        raise ValueError("Simpson's rule needs an even, positive panel count")
    theta = np.linspace(-math.pi, math.pi, panels + 1)
    return float(simpson(initial_distance(a, N, theta), x=theta) / (2 * math.pi))


def bloch_average(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], panels: int = BLOCH_PANELS) -> float:
    """``1/(4 pi) iint fn(theta, phi) sin(theta) dtheta dphi`` with a Simpson product rule.

    ``fn`` must accept broadcast ``theta`` and ``phi`` arrays.
    """
    if panels < 2 or panels % 2:
        raise ValueError("Simpson's rule needs an even, positive panel count")
    theta = np.linspace(0.0, math.pi, panels + 1)
    phi = np.linspace(0.0, 2 * math.pi, panels + 1)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    vals = np.asarray(fn(T, P), float) * np.sin(T)
    inner = simpson(vals, x=phi, axis=1)
    return float(simpson(inner, x=theta) / (4 * math.pi))


# --- time evolutions -------------------------------------------------------------


def dephasing_floor(N: int) -> float:
    return 1.0 / (4.0 * math.sqrt(N))


def dephasing_initial(N: int, a: float) -> float:
    return math.sqrt((1.0 - 1.0 / N) ** 2 + a * a) / 2.0


def dephasing_evolution(t, N: int, a: float, gamma: float, convention: Convention = "continuous"):
    """Averaged coin trace distance under dephasing, from ``D(0)`` down to ``1/(4 sqrt N)``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be non-negative")
    e = _decay(gamma, t, convention)
    return _as_output(dephasing_floor(N) * (1 - e) + dephasing_initial(N, a) * e)


BITFLIP_FLOOR = 0.25


def bitflip_evolution(t, D0: float, gamma: float, convention: Convention = "continuous"):
    """Averaged coin trace distance under bit flip; tends to 1/4 for every ``D0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("time must be non-negative")
    if not 0.0 <= D0 <= 1.0:
        raise ValueError(f"initial distance must lie in [0, 1], got {D0}")
    e = _decay(gamma, t, convention)
    return _as_output(BITFLIP_FLOOR * (1 - e) + D0 * e)


def _inverse_decay(ratio: float, gamma: float, convention: Convention) -> float:
    if convention == "per-step":
        return math.log(ratio) / math.log(1.0 - 2.0 * gamma)
    if convention == "continuous":
        return -math.log(ratio) / (2.0 * gamma)
    raise ValueError(f"unknown convention {convention!r}")


def _check_rate(gamma: float):
    if not 0.0 < gamma < 0.5:
        raise DomainError(
            f"mixing time needs 0 < gamma < 1/2 (log(1 - 2 gamma) must be negative), got {gamma}")


def mixing_time_dep(D_target: float, N: int, a: float, gamma: float,
                    convention: Convention = "per-step") -> float:
    """Time at which :func:`dephasing_evolution` reaches ``D_target``."""
    _check_rate(gamma)
    floor, start = dephasing_floor(N), dephasing_initial(N, a)
    if not floor < D_target <= start:
        raise UnreachableTargetError(
            f"dephasing target {D_target} outside the reachable band ({floor:.6g}, {start:.6g}]")
    return _inverse_decay((D_target - floor) / (start - floor), gamma, convention)


def mixing_time_bit(D_target: float, D0: float, gamma: float,
                    convention: Convention = "per-step") -> float:
    """Time at which :func:`bitflip_evolution` reaches ``D_target``.

    Bit-flip noise leaves the transverse ``x`` coin component untouched, so
    the distance never drops below 1/4.
    """
    _check_rate(gamma)
    if D_target <= BITFLIP_FLOOR:
        raise UnreachableTargetError(
            f"bit-flip target {D_target} is unreachable: the distance saturates at 0.25")
    if D_target > D0:
        raise UnreachableTargetError(f"target {D_target} exceeds the initial distance {D0}")
    return _inverse_decay((D_target - BITFLIP_FLOOR) / (D0 - BITFLIP_FLOOR), gamma, convention)


# --- tunable dephasing rate -------------------------------------------------------


def tunable_rhs(a: float, N: int) -> float:
    """Target value ``3 (sqrt((1 - 1/N)^2 + a^2) / (2 a^2) - 1)`` for ``f_dep``."""
    return 3.0 * (math.sqrt((1.0 - 1.0 / N) ** 2 + a * a) / (2.0 * a * a) - 1.0)


@dataclass(frozen=True)
class RateSolution:
    a: float
    N: int
    M: int
    rhs: float
    gamma: float | None
    residual: float | None
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.gamma is not None


def tune_gamma_dep(a: float, N: int, M: int | None = None, tol: float = 1e-10,
                   gamma_max: float = 1.0) -> RateSolution:
    """Solve ``f_dep(M, gamma) = tunable_rhs(a, N)`` for ``gamma`` by bisection.

    ``f_dep`` decreases strictly from ``M/2`` (at ``gamma -> 0``) to 0, so a
    root exists exactly when the right-hand side lies in ``(0, M/2)``.
    Otherwise a :class:`RateSolution` with ``gamma=None`` is returned.
    """
    if not 0.0 < a <= 1.0:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    if N < 16:
        raise ValueError(f"N must be >= 16, got {N}")
    M = int(math.isqrt(N) // 2) if M is None else int(M)
    rhs = tunable_rhs(a, N)
    if rhs <= 0:
        return RateSolution(a, N, M, rhs, None, None, "right-hand side <= 0; f_dep is positive")
    if rhs >= M / 2:
        return RateSolution(a, N, M, rhs, None, None,
                            f"right-hand side >= sup f_dep = M/2 = {M / 2:g}")

    def g(x):
        return f_dep(M, x) - rhs

    lo, hi = 0.0, gamma_max
    while g(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            return RateSolution(a, N, M, rhs, None, None, "failed to bracket root")
    # invariant: g > 0 on (0, lo], g(hi) <= 0; bisect to floating-point resolution
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    root = hi if lo == 0.0 or abs(g(hi)) <= abs(g(lo)) else lo
    return RateSolution(a, N, M, rhs, root, abs(g(root)))


# --- bounds at the mixing time ----------------------------------------------------


@dataclass(frozen=True)
class Bound:
    value: float
    regime: float  # small parameter that the approximation assumes << 1
    regime_ok: bool


REGIME_LIMIT = 0.1


def _dep_prefactor(params: AnalysisParams) -> float:
    d = params.delta_dep
    return d * (1.0 + 2.0 / (params.N * d)) ** 2


def dephasing_bound_at_tmix(params: AnalysisParams, a: float, theta, phi, gamma: float, t: float) -> Bound:
    """``N delta/4 + a^2 M X + a^2 M Y`` before averaging over coin states.

    ``X = delta (1 + 2/(N delta))^2 e^{-2 g t}`` and
    ``Y = delta (1 + 2/(N delta))^2 sin^2(theta) cos^2(phi) e^{-2 (t+3) g}
    (1 - e^{-3 M g}) / (1 - e^{-6 g})``.
    """
    value = _dep_bound_value(params, a, theta, phi, gamma, t)
    regime = a * a * (1.0 + 2.0 / (params.N * params.delta_dep)) ** 2 * math.exp(-2 * gamma * t)
    return Bound(float(value), regime, regime < REGIME_LIMIT)


def _dep_bound_value(params, a, theta, phi, gamma, t):
    pref = _dep_prefactor(params)
    X = pref * math.exp(-2 * gamma * t)
    geom = math.exp(-2 * (t + 3) * gamma) * math.expm1(-3 * params.M * gamma) / math.expm1(-6 * gamma)
    Y = pref * np.sin(theta) ** 2 * np.cos(phi) ** 2 * geom
    return 0.25 * params.N * params.delta_dep + a * a * params.M * (X + Y)


def dephasing_zone_sum_bound(params: AnalysisParams, a: float, theta, phi, gamma: float, t: float) -> float:
    """Zone-summed bound on twice the distance: ``delta + 4 M A + 4 sum_{k<M} k B``."""
    d, N, M = params.delta_dep, params.N, params.M
    e = math.exp(-2 * gamma * t)
    A = math.sqrt(d * d + a * a * (d + 2.0 / N) ** 2 * e)
    B = np.sqrt(d * d + (d + 2.0 / N) ** 2 * a * a * np.sin(theta) ** 2 * np.cos(phi) ** 2 * e)
    return _as_output(d + 4 * M * A + 4 * B * (M - 1) * M / 2)


def avg_dephasing_bound(params: AnalysisParams, a: float, gamma: float, t: float) -> float:
    """Bloch-sphere average of :func:`dephasing_bound_at_tmix`: ``N delta/4 + a^2 M X (1 + f/3)``."""
    X = _dep_prefactor(params) * math.exp(-2 * gamma * t)
    return 0.25 * params.N * params.delta_dep + a * a * params.M * X * (1 + f_dep(params.M, gamma) / 3)


def bitflip_avg_bound_at_tmix(params: AnalysisParams, a: float, M: int | None, gamma: float, t: float) -> float:
    """``N delta/4 + (M delta/2) a^2 (1 + 1/(N delta))^2 (3 + f_bit) e^{-2 g t}`` (coin at phi = pi/2)."""
    M = params.M if M is None else M
    d, N = params.delta_bit, params.N
    fb = 0.0 if math.isinf(gamma) else f_bit(M, gamma)
    tail = (M * d / 2) * a * a * (1 + 1 / (N * d)) ** 2 * (3 + fb) * math.exp(-2 * gamma * t)
    return N * d / 4 + tail
