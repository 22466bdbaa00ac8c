"""One test (or parametrized family) per acceptance criterion."""

import math
import time

import numpy as np
import pytest

from percwalk.analysis import (
    bitflip_evolution,
    dephasing_evolution,
    dephasing_floor,
    dephasing_initial,
    f_dep,
    mixing_time_bit,
    mixing_time_dep,
    tunable_rhs,
    tune_gamma_dep,
)
from percwalk.channels import apply_channel, calibrate, make_bitflip, make_dephasing, make_identity
from percwalk.cli import build_config, cmd_table1
from percwalk.lattice import (
    PercolationModel,
    build_lattice,
    sample_configuration,
    zone_decompose,
    zone_normalization,
    zone_probabilities,
)
from percwalk.qmatrix import hermitian_eigenvalues, random_density, trace_distance
from percwalk.walk import (
    HADAMARD,
    CoinSpec,
    coin_operator,
    evolve_exact,
    evolve_monte_carlo,
    initial_state,
    noisy_step,
    observe_exact,
    observe_factorized,
    observe_monte_carlo,
)
from percwalk.zonemodel import BlochCoinState

TABLE1 = {1.0: 0.75, 0.9: 0.71, 0.8: 0.67, 0.7: 0.63, 0.6: 0.59, 0.5: 0.56}


@pytest.fixture(scope="module")
def table1():
    start = time.perf_counter()
    rec = cmd_table1(build_config({"timestamp": False}))
    elapsed = time.perf_counter() - start
    s = rec.series["table1"]
    return dict(zip(s["a"], s["analytic_bound"])), elapsed


@pytest.mark.acceptance(1)
@pytest.mark.parametrize("a", list(TABLE1))
def test_c1_table_entry(table1, a):
    values, _ = table1
    assert abs(values[a] - TABLE1[a]) <= 0.005, f"a={a}: {values[a]:.5f} vs {TABLE1[a]}"


@pytest.mark.acceptance(1)
def test_c1_runtime(table1):
    assert table1[1] < 1.0


@pytest.mark.acceptance(2)
def test_c2_hadamard():
    ref = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert np.max(np.abs(coin_operator(CoinSpec(math.pi / 2, math.pi / 4)) - ref)) <= 1e-12


@pytest.mark.acceptance(3)
def test_c3_monte_carlo_vs_exact():
    lat = build_lattice(2)
    noise = calibrate("dephasing", 0.1)
    rho0 = initial_state(lat, BlochCoinState(1.0).matrix())
    start = time.perf_counter()
    exact = evolve_exact(rho0, 3, 0.5, HADAMARD, noise, lat)
    mc = evolve_monte_carlo(rho0, 3, 0.5, HADAMARD, noise, lat, 10_000, seed=0)
    elapsed = time.perf_counter() - start
    diff = np.abs(mc.rho - exact)
    noisy = mc.stderr > 0
    # entries with zero sample spread must be exact
    assert np.all(diff[~noisy] <= 1e-12)
    assert np.all(diff[noisy] <= 4 * mc.stderr[noisy]), f"max z {np.max(diff[noisy] / mc.stderr[noisy]):.2f}"
    td = trace_distance(mc.rho, exact)
    assert td < 0.01, f"trace distance {td:.5f}"
    assert elapsed < 30


@pytest.mark.acceptance(4)
@pytest.mark.parametrize("N", [100, 10_000, 10**6])
@pytest.mark.parametrize("a", [0.0, 0.5, 1.0])
def test_c4_endpoints(N, a):
    g = 0.1
    assert abs(dephasing_evolution(0.0, N, a, g) - math.sqrt((1 - 1 / N) ** 2 + a * a) / 2) <= 1e-12
    assert abs(dephasing_evolution(1e5, N, a, g) - 1 / (4 * math.sqrt(N))) <= 1e-12
    assert abs(bitflip_evolution(1e5, 0.75, g) - 0.25) <= 1e-12
    if N == 10_000:
        assert abs(dephasing_floor(N) - 0.0025) <= 1e-12


@pytest.mark.acceptance(5)
@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_c5_channel_pinning(gamma):
    ch = calibrate("dephasing", gamma).channel()
    init = BlochCoinState(0.9, 1.2, 0.7).matrix()
    lat = build_lattice(3)
    walker0 = initial_state(lat, init)
    rho, walker = init, walker0
    for n in range(1, 101):
        rho = apply_channel(ch, rho)
        walker = apply_channel(ch, walker)
        factor = math.exp(-gamma * n)
        assert abs(rho[0, 1] - init[0, 1] * factor) <= 1e-9
        assert abs(rho[1, 0] - init[1, 0] * factor) <= 1e-9
        o = lat.origin_index()
        assert abs(walker[o, lat.N + o] - walker0[o, lat.N + o] * factor) <= 1e-9


def _check_state(rho):
    assert abs(np.trace(rho) - 1) <= 1e-9
    assert hermitian_eigenvalues(0.5 * (rho + rho.conj().T))[0] >= -1e-7


@pytest.mark.acceptance(6)
def test_c6_channels_on_random_states():
    rng = np.random.default_rng(2024)
    channels = [make_identity()] + [make_dephasing(p) for p in (0.0, 0.3, 1.0)] + \
        [make_bitflip(p) for p in (0.0, 0.2, 0.5)] + \
        [calibrate(k, g).channel() for k in ("dephasing", "bitflip") for g in (0.01, 0.1, 2.0)]
    for _ in range(1000):
        rho = random_density(2, rng, rank=int(rng.integers(1, 3)))
        for ch in channels:
            _check_state(apply_channel(ch, rho))


@pytest.mark.acceptance(6)
def test_c6_random_percolated_steps():
    rng = np.random.default_rng(7)
    for i in range(100):
        side = int(rng.integers(2, 5))
        lat = build_lattice(side)
        cfg = sample_configuration(PercolationModel(float(rng.random()), seed=i), lat, step=i)
        kind = ("none", "dephasing", "bitflip")[i % 3]
        noise = calibrate(kind, float(rng.uniform(0, 1)))
        coin = CoinSpec(float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 2 * math.pi)))
        rho = random_density(2 * lat.N, rng)
        _check_state(noisy_step(rho, cfg, coin, noise, lat))


@pytest.mark.acceptance(7)
@pytest.mark.parametrize("side", range(2, 17))
def test_c7_zone_normalization(side):
    lat = build_lattice(side)
    zones = zone_decompose(lat)
    noise = calibrate("dephasing", 0.1)
    rho0 = initial_state(lat, BlochCoinState(0.8).matrix())
    steps = 8
    if side <= 3:
        obs = observe_exact(rho0, steps, 0.5, HADAMARD, noise, lat)
    elif side <= 8:
        obs = observe_factorized(rho0, steps, 0.5, HADAMARD, noise, lat)
    else:
        obs = observe_monte_carlo(rho0, steps, 0.5, HADAMARD, noise, lat, 50, seed=side)
    for pos in obs.position:
        assert abs(zone_normalization(zone_probabilities(pos, zones)) - 1) <= 1e-6


@pytest.mark.acceptance(8)
def test_c8_mixing_time_inverse():
    rng = np.random.default_rng(8)
    for _ in range(50):
        N = int(rng.integers(16, 10**6))
        a = float(rng.uniform(0.05, 1))
        g = float(rng.uniform(1e-3, 0.49))
        lo, hi = dephasing_floor(N), dephasing_initial(N, a)
        target = float(lo + rng.uniform(0.01, 1) * (hi - lo))
        t = mixing_time_dep(target, N, a, g, "per-step")
        assert abs(dephasing_evolution(t, N, a, g, "per-step") - target) <= 1e-9
        d0 = float(rng.uniform(0.3, 1.0))
        tb_target = float(0.25 + rng.uniform(0.01, 1) * (d0 - 0.25))
        tb = mixing_time_bit(tb_target, d0, g, "per-step")
        assert abs(bitflip_evolution(tb, d0, g, "per-step") - tb_target) <= 1e-9


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("a", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
def test_c9_tunable_root(a):
    sol = tune_gamma_dep(a, 10_000)
    assert sol.found, f"a={a}: {sol.reason} (rhs={sol.rhs:.4g})"
    assert abs(f_dep(sol.M, sol.gamma) - tunable_rhs(a, 10_000)) <= 1e-10


@pytest.mark.acceptance(9)
@pytest.mark.parametrize("a", [0.9, 1.0])
def test_c9_no_solution(a):
    sol = tune_gamma_dep(a, 10_000)
    assert not sol.found and sol.gamma is None and sol.reason
