"""Oracle-equivalence checks between independent engines and closed forms."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .analysis import avg_distance_theta, bloch_average, initial_distance
from .channels import apply_channel, calibrate, completeness_error
from .lattice import build_lattice
from .qmatrix import trace_distance
from .walk import (
    HADAMARD,
    coin_operator,
    evolve_exact,
    evolve_factorized,
    evolve_monte_carlo,
    initial_state,
)
from .zonemodel import BlochCoinState, dephasing_closed_form, empty_graph_iterate


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    seconds: float


def _timed(name, tol, fn) -> CheckResult:
    start = time.perf_counter()
    value = float(fn())
    return CheckResult(name, value, tol, bool(value <= tol), round(time.perf_counter() - start, 3))


def _hadamard_error():
    ref = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    return np.max(np.abs(coin_operator(HADAMARD) - ref))


def _exact_vs_factorized(side):
    def run():
        lat = build_lattice(side)
        noise = calibrate("dephasing", 0.1)
        rho0 = initial_state(lat, BlochCoinState(1.0).matrix())
        a = evolve_exact(rho0, 3, 0.5, HADAMARD, noise, lat)
        b = evolve_factorized(rho0, 3, 0.5, HADAMARD, noise, lat)
        return np.max(np.abs(a - b))
    return run


def _monte_carlo_vs_exact(seed):
    lat = build_lattice(2)
    noise = calibrate("dephasing", 0.1)
    rho0 = initial_state(lat, BlochCoinState(1.0).matrix())

    def run():
        exact = evolve_exact(rho0, 3, 0.5, HADAMARD, noise, lat)
        mc = evolve_monte_carlo(rho0, 3, 0.5, HADAMARD, noise, lat, 10_000, seed=seed)
        return trace_distance(mc.rho, exact)
    return run


def _completeness():
    return max(completeness_error(calibrate(k, g).channel().kraus)
               for k in ("dephasing", "bitflip") for g in (0.0, 0.01, 0.1, 0.5, 5.0))


def _closed_form_pinning():
    worst = 0.0
    init = BlochCoinState(0.8, 1.1, 0.4)
    for g in (0.01, 0.1, 0.5):
        noise = calibrate("dephasing", g)
        rho = init.matrix()
        for n in range(1, 101):
            rho = apply_channel(noise.channel(), rho)
            expected = init.matrix()[0, 1] * math.exp(-g * n)
            worst = max(worst, abs(rho[0, 1] - expected))
    return worst


def _empty_graph_spectrum():
    init = BlochCoinState(0.7, 0.9, 1.3)
    noise = calibrate("dephasing", 0.05)
    worst = 0.0
    for n in range(0, 31):
        lab = empty_graph_iterate(HADAMARD, noise, init.matrix(), n)
        ref = dephasing_closed_form(init, 0.05, n)
        worst = max(worst, np.max(np.abs(np.linalg.eigvalsh(lab) - np.linalg.eigvalsh(ref))))
    return worst


def _bloch_quadrature():
    # theta-only integrand: the sphere average reduces to a 1D integral with weight sin(theta)/2
    from scipy.integrate import quad

    a, N = 0.7, 10_000
    ref = quad(lambda t: initial_distance(a, N, t) * math.sin(t) / 2, 0, math.pi, epsabs=1e-13)[0]
    return abs(bloch_average(lambda t, p: initial_distance(a, N, t)) - ref)


def _theta_average_convergence():
    return abs(avg_distance_theta(0.8, 10_000) - avg_distance_theta(0.8, 10_000, panels=4096))


def run_suite(seed: int = 0) -> list[CheckResult]:
    return [
        _timed("hadamard_coin", 1e-12, _hadamard_error),
        _timed("kraus_completeness", 1e-10, _completeness),
        _timed("exact_vs_factorized_side2", 1e-12, _exact_vs_factorized(2)),
        _timed("exact_vs_factorized_side3", 1e-12, _exact_vs_factorized(3)),
        _timed("monte_carlo_vs_exact_trace_distance", 1e-2, _monte_carlo_vs_exact(seed)),
        _timed("dephasing_closed_form_pinning", 1e-9, _closed_form_pinning),
        _timed("empty_graph_vs_closed_form_spectrum", 1e-12, _empty_graph_spectrum),
        _timed("bloch_quadrature_vs_adaptive", 1e-9, _bloch_quadrature),
        _timed("theta_average_panel_convergence", 1e-9, _theta_average_convergence),
    ]
