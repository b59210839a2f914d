import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from oracles import reduced_purity_concurrence, spin_flip_concurrence
from squaredot.constants import HBAR
from squaredot.coupling import ENERGY_BASIS
from squaredot.dynamics import QState
from squaredot.entanglement import (
    ProtocolTrace,
    computational_start_trace,
    concurrence_pure,
    default_time_grid,
    detuned_theta,
    detuned_trace,
    preservation_trace,
    root_swap_trace,
)

PM = QState([0, 0, 1, 0])  # |+,-> in the energy basis


def random_states(rng, n):
    v = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# -- concurrence ------------------------------------------------------------------


def test_concurrence_examples():
    assert concurrence_pure(PM) == 0.0
    bell = QState(np.array([0, -1j, 1, 0]) / math.sqrt(2))
    assert concurrence_pure(bell) == pytest.approx(1.0, abs=1e-15)


def test_concurrence_against_oracles():
    rng = np.random.default_rng(0)
    states = random_states(rng, 200)
    got = concurrence_pure(states)
    for psi, c in zip(states, got):
        assert c == pytest.approx(spin_flip_concurrence(psi), abs=1e-10)
        assert c == pytest.approx(reduced_purity_concurrence(psi), abs=1e-7)


def test_concurrence_basis_independent():
    rng = np.random.default_rng(1)
    psi = random_states(rng, 1)[0]
    ref = concurrence_pure(psi)
    values = [concurrence_pure(psi, unitary_group.rvs(2, random_state=rng)) for _ in range(100)]
    assert max(values) - min(values) < 1e-10
    assert values[0] == pytest.approx(ref, abs=1e-10)
    assert concurrence_pure(psi, ENERGY_BASIS) == pytest.approx(ref, abs=1e-12)


def test_concurrence_local_unitary_invariance():
    rng = np.random.default_rng(2)
    psi = random_states(rng, 1)[0]
    ref = concurrence_pure(psi)
    for _ in range(100):
        U = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
        assert abs(concurrence_pure(U @ psi) - ref) < 1e-10


def test_concurrence_rejections():
    with pytest.raises(ValueError):
        concurrence_pure(np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        concurrence_pure(PM, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        concurrence_pure(QState.basis("000"))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda x: np.linalg.norm(x) > 1e-3))
def test_concurrence_bounds_and_swap(x):
    psi = np.array(x[:4]) + 1j * np.array(x[4:])
    psi /= np.linalg.norm(psi)
    c = concurrence_pure(psi)
    assert -1e-12 <= c <= 1 + 1e-12
    swapped = psi[[0, 2, 1, 3]]
    assert concurrence_pure(swapped) == pytest.approx(c, abs=1e-12)


def test_trace_validation():
    with pytest.raises(ValueError):
        ProtocolTrace(np.zeros(3), np.zeros(2), np.zeros(3), "x")
    with pytest.raises(ValueError):
        ProtocolTrace(np.zeros(2), np.array([0.0, 1.5]), np.zeros(2), "x")


def test_default_grid_density():
    t = default_time_grid(2.0, n_periods=2)
    assert t.size == 4001 and t[-1] == pytest.approx(4.0)


# -- ROOT SWAP -------------------------------------------------------------------------


def test_root_swap_closed_form():
    v = 2.0
    tr = root_swap_trace(v, gamma=9.0)
    np.testing.assert_allclose(tr.concurrence, np.abs(np.sin(2 * v * tr.times / HBAR)), atol=1e-9)
    pts = np.array([0.0, math.pi * HBAR / (8 * v), math.pi * HBAR / (4 * v)])
    c = root_swap_trace(v, pts).concurrence
    np.testing.assert_allclose(c, [0.0, 1 / math.sqrt(2), 1.0], atol=1e-12)


def test_root_swap_zeros():
    v = 3.0
    zeros = np.arange(1, 5) * math.pi * HBAR / (2 * v)
    assert np.all(root_swap_trace(v, zeros).concurrence < 1e-9)


def test_root_swap_gamma_independent():
    t = np.linspace(0, 500, 50)
    a = root_swap_trace(1.0, t, gamma=1.0).concurrence
    b = root_swap_trace(1.0, t, gamma=30.0).concurrence
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_root_swap_rejects_nonpositive_v():
    with pytest.raises(ValueError):
        root_swap_trace(0.0)


# -- computational start -------------------------------------------------------------


def test_computational_start_exact_cancellation():
    tr = computational_start_trace(2.0, (5.0, 0.0), "00", np.linspace(0, 5000, 10_000))
    assert tr.concurrence.max() < 1e-12
    tr = computational_start_trace(2.0, (0.0, 5.0), "10", np.linspace(0, 5000, 1000))
    assert tr.concurrence.max() < 1e-12


def test_computational_start_without_coupling():
    tr = computational_start_trace(0.0, 5.0, "01", np.linspace(0, 3000, 500))
    assert tr.concurrence.max() < 1e-12


def test_computational_start_reaches_full_entanglement():
    gamma = 10.0
    v = 0.2 * gamma
    envelope = math.pi * HBAR / (2 * v)
    tr = computational_start_trace(v, gamma, "00", np.linspace(0, envelope, 20_001))
    assert tr.concurrence.max() >= 0.99


def test_computational_start_validation():
    with pytest.raises(ValueError):
        computational_start_trace(1.0, 1.0, "2")
    with pytest.raises(ValueError):
        computational_start_trace(-1.0, 1.0)


def test_computational_start_qubit_swap_symmetry():
    t = np.linspace(0, 800, 200)
    a = computational_start_trace(2.0, 7.0, "01", t).concurrence
    b = computational_start_trace(2.0, 7.0, "10", t).concurrence
    np.testing.assert_allclose(a, b, atol=1e-10)


# -- detuned ---------------------------------------------------------------------------


def test_detuned_theta():
    theta, eps = detuned_theta(3.0, 4.0)
    assert eps == 5.0
    assert math.sin(2 * theta) == pytest.approx(4.0 / 5.0)


def test_detuned_closed_forms_match_evolution():
    for gamma, v in ((10.0, 1.0), (10.0, 5.0), (2.0, 7.0)):
        tr = detuned_trace(gamma, v)
        np.testing.assert_allclose(tr.concurrence, tr.reference["concurrence_closed_form"], atol=1e-9)
        np.testing.assert_allclose(tr.transfer_prob, tr.reference["transfer_closed_form"], atol=1e-9)


def test_detuned_small_coupling_values():
    gamma = 10.0
    tr = detuned_trace(gamma, 0.1 * gamma)
    s = 0.1 / math.sqrt(1.01)
    assert tr.concurrence.max() == pytest.approx(2 * s * math.sqrt(1 - s * s), abs=1e-6)
    assert tr.concurrence.max() == pytest.approx(0.198, abs=0.002)
    assert tr.transfer_prob.max() == pytest.approx(s * s, rel=1e-6)
    assert tr.transfer_prob.max() == pytest.approx(0.01, rel=0.05)


def test_detuned_zero_gamma_is_root_swap():
    v = 2.0
    t = np.linspace(0, 2000, 400)
    a = detuned_trace(0.0, v, t)
    b = root_swap_trace(v, t)
    np.testing.assert_allclose(a.concurrence, b.concurrence, atol=1e-10)
    assert detuned_trace(0.0, v).concurrence.max() == pytest.approx(1.0, abs=1e-6)


def test_detuned_transfer_starts_at_zero():
    # the state-derived form sin^2 vanishes at t = 0
    tr = detuned_trace(10.0, 1.0, [0.0])
    assert tr.transfer_prob[0] < 1e-30


# -- preservation ----------------------------------------------------------------------


def test_preservation_equal_couplings():
    tr = preservation_trace(5.0, 5.0)
    assert tr.metadata["min_concurrence_after_switch"] == pytest.approx(1 / math.sqrt(2), abs=1e-5)
    np.testing.assert_allclose(tr.concurrence, tr.reference["concurrence_closed_form"], atol=1e-9)


def test_preservation_small_coupling():
    tr = preservation_trace(10.0, 1.0)
    after = tr.times >= tr.metadata["t_switch_ps"]
    assert tr.concurrence[after].min() >= 0.98
    s = 0.1 / math.sqrt(1.01)
    assert tr.metadata["min_concurrence_after_switch"] == pytest.approx(math.sqrt(1 - s * s), abs=1e-6)


def test_preservation_vanishing_coupling_limit():
    tr = preservation_trace(10.0, 1e-4)
    after = tr.times >= tr.metadata["t_switch_ps"]
    assert 1 - tr.concurrence[after].min() < 1e-9


def test_preservation_before_switch_is_root_swap():
    v = 2.0
    t_switch = math.pi * HBAR / (4 * v)
    t = np.linspace(0, t_switch, 100)
    tr = preservation_trace(8.0, v, t)
    np.testing.assert_allclose(tr.concurrence, np.abs(np.sin(2 * v * t / HBAR)), atol=1e-10)
