import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percwalk.channels import calibrate
from percwalk.lattice import build_lattice, zone_decompose
from percwalk.qmatrix import PAULI_X, PAULI_Y, PAULI_Z, is_density
from percwalk.walk import HADAMARD
from percwalk.zonemodel import (
    BlochCoinState,
    bitflip_closed_form,
    corotating_frame,
    default_zone_profile,
    dephasing_closed_form,
    empty_graph_iterate,
    empty_graph_op,
    zone_ansatz_state,
)

angles = st.floats(0, math.pi)
phases = st.floats(0, 2 * math.pi)
mix = st.floats(0, 1)


@settings(max_examples=50, deadline=None)
@given(a=mix, t=angles, p=phases)
def test_bloch_state_expectations(a, t, p):
    s = BlochCoinState(a, t, p)
    rho = s.matrix()
    assert is_density(rho)
    ev = [np.trace(rho @ P).real for P in (PAULI_X, PAULI_Y, PAULI_Z)]
    assert np.allclose(ev, s.bloch_vector())


def test_bloch_state_rejects_bad_a():
    with pytest.raises(ValueError):
        BlochCoinState(1.2)


def test_default_coin_is_plus_y():
    assert np.allclose(BlochCoinState().matrix(), 0.5 * np.array([[1, -1j], [1j, 1]]))


@settings(max_examples=40, deadline=None)
@given(a=mix, t=angles, p=phases, g=st.floats(0, 2), time=st.floats(0, 50))
def test_closed_forms_are_states(a, t, p, g, time):
    init = BlochCoinState(a, t, p)
    assert is_density(dephasing_closed_form(init, g, time))
    assert is_density(bitflip_closed_form(init, g, time))


def test_closed_forms_at_time_zero():
    init = BlochCoinState(0.8, 0.7, 1.9)
    bit = bitflip_closed_form(init, 0.3, 0.0)
    assert np.allclose(bit, init.matrix())
    # the dephasing closed form measures theta from the other pole
    flipped = BlochCoinState(init.a, math.pi - init.theta, init.phi)
    assert np.allclose(dephasing_closed_form(init, 0.3, 0.0), flipped.matrix())


def test_closed_forms_reject_negative_time():
    with pytest.raises(ValueError):
        dephasing_closed_form(BlochCoinState(), 0.1, -1)
    with pytest.raises(ValueError):
        bitflip_closed_form(BlochCoinState(), 0.1, -1)


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_bitflip_iterate_matches_closed_form_in_corotating_frame(gamma):
    init = BlochCoinState(0.9, 1.0, 0.6)
    noise = calibrate("bitflip", gamma)
    for n in (0, 1, 5, 40):
        lab = empty_graph_iterate(HADAMARD, noise, init.matrix(), n)
        assert np.allclose(corotating_frame(HADAMARD, lab, n), bitflip_closed_form(init, gamma, n), atol=1e-12)


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_dephasing_iterate_spectrum_matches_closed_form(gamma):
    init = BlochCoinState(0.9, 1.0, 0.6)
    noise = calibrate("dephasing", gamma)
    for n in (0, 1, 5, 40):
        lab = empty_graph_iterate(HADAMARD, noise, init.matrix(), n)
        ref = dephasing_closed_form(init, gamma, n)
        assert np.allclose(np.linalg.eigvalsh(lab), np.linalg.eigvalsh(ref), atol=1e-12)


def test_empty_graph_op_without_noise_is_rotation():
    rho = BlochCoinState(1.0, 0.3, 0.2).matrix()
    out = empty_graph_op(HADAMARD, None, rho)
    assert np.allclose(np.trace(out @ out), 1.0)
    assert np.allclose(empty_graph_iterate(HADAMARD, None, rho, 4), rho)  # R^4 = I up to phase


def test_default_profile_is_normalized_and_decreasing():
    zones = zone_decompose(build_lattice(7))
    p = default_zone_profile(0.3, 3, zones.sizes.astype(float))
    assert np.isclose(np.dot(zones.sizes[:4], p), 1.0)
    assert np.all(np.diff(p) < 0)


@pytest.mark.parametrize("m,n", [(0, 0), (1, 2), (3, 1)])
def test_zone_ansatz_walker_state(m, n):
    lat = build_lattice(7)
    zones = zone_decompose(lat)
    noise = calibrate("dephasing", 0.1)
    init = BlochCoinState(0.8)
    ans = zone_ansatz_state(init, lat, 0.3, m, n, noise)
    assert ans.n_e == 3 * m + n
    assert np.isclose(ans.normalization(), 1.0)
    rho = ans.walker_state(zones)
    assert is_density(rho)
    # origin carries the n_e-th iterate; the front carries the (n_e - 3m)-th
    assert np.allclose(ans.coin_states[0], empty_graph_iterate(HADAMARD, noise, init.matrix(), ans.n_e))
    assert np.allclose(ans.coin_states[m], empty_graph_iterate(HADAMARD, noise, init.matrix(), n))


def test_zone_ansatz_mixes_adjacent_iterates():
    lat = build_lattice(7)
    noise = calibrate("bitflip", 0.2)
    init = BlochCoinState(0.7, 0.4, 0.9)
    ans = zone_ansatz_state(init, lat, 0.25, 3, 0, noise)
    xi = lambda k: empty_graph_iterate(HADAMARD, noise, init.matrix(), k)  # noqa: E731
    assert np.allclose(ans.coin_states[1], 0.25 * xi(9) + 0.75 * xi(6))
    assert np.allclose(ans.coin_states[2], 0.25 * xi(6) + 0.75 * xi(3))


def test_zone_ansatz_validation():
    lat = build_lattice(5)
    with pytest.raises(ValueError):
        zone_ansatz_state(BlochCoinState(), lat, 0.3, 5, 0)
    with pytest.raises(ValueError):
        zone_ansatz_state(BlochCoinState(), lat, 0.3, 1, 3)
    with pytest.raises(ValueError):
        zone_ansatz_state(BlochCoinState(), lat, 0.3, 1, 0, probabilities=[1.0])
    with pytest.warns(UserWarning):
        zone_ansatz_state(BlochCoinState(), lat, 0.8, 1, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        zone_ansatz_state(BlochCoinState(), lat, 0.5, 1, 0)
