import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import unitary_group

from nhqubits.entanglement import (
    BELL,
    NotADensityMatrix,
    ZeroState,
    bell_projection,
    concurrence_mixed,
    concurrence_pure,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
states = arrays(complex, 4, elements=st.builds(complex, finite, finite)).filter(
    lambda v: np.linalg.norm(v) > 1e-3
)


def random_pure(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return v / np.linalg.norm(v)


def test_pure_examples():
    assert concurrence_pure([1, 0, 0, 0]) == 0
    assert concurrence_pure(np.array([1, 1, 1, -1]) / 2) == pytest.approx(1)
    for th in np.linspace(0, np.pi, 13):
        v = [0, np.cos(th), -1j * np.sin(th), 0]
        assert concurrence_pure(v) == pytest.approx(abs(np.sin(2 * th)), abs=1e-15)


def test_pure_is_scale_invariant():
    v = np.array([0.3, 1j, -0.2, 0.5])
    assert concurrence_pure(7.5 * v) == pytest.approx(concurrence_pure(v), rel=1e-14)


def test_zero_state():
    with pytest.raises(ZeroState):
        concurrence_pure(np.zeros(4))
    with pytest.raises(ZeroState):
        bell_projection(np.zeros(4))


def test_bell_basis():
    assert np.allclose(BELL @ BELL.conj().T, np.eye(4), atol=1e-15)
    for e in BELL:
        assert concurrence_pure(e) == pytest.approx(1)
    assert np.allclose(bell_projection(BELL[0]), [1, 0, 0, 0])


def test_bell_projection_of_ff():
    c = bell_projection([1, 0, 0, 0])
    assert c[0] == pytest.approx(1 / np.sqrt(2)) and c[1] == pytest.approx(-1j / np.sqrt(2))
    assert abs(np.sum(c**2)) <= 1e-15


def test_bell_identity_random():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        c = bell_projection(v)
        assert abs(abs(np.sum(c**2)) / np.vdot(v, v).real - concurrence_pure(v)) <= 1e-12


def test_mixed_examples():
    assert concurrence_mixed(np.outer(BELL[0], BELL[0].conj())) == pytest.approx(1, abs=1e-12)
    assert concurrence_mixed(np.eye(4) / 4) == 0


@pytest.mark.parametrize("p", np.linspace(0, 1, 11))
def test_werner_closed_form(p):
    b = BELL[3]
    rho = p * np.outer(b, b.conj()) + (1 - p) * np.eye(4) / 4
    assert concurrence_mixed(rho) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


def test_mixed_equals_pure_on_random_states():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        v = random_pure(rng)
        assert abs(concurrence_mixed(np.outer(v, v.conj())) - concurrence_pure(v)) <= 1e-10


def test_methods_agree_on_random_mixed_states():
    rng = np.random.default_rng(9)
    for _ in range(200):
        A = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        rho = A @ A.conj().T
        assert concurrence_mixed(rho) == pytest.approx(concurrence_mixed(rho, method="eigs"), abs=1e-7)


def test_local_unitary_invariance():
    rng = np.random.default_rng(13)
    for _ in range(100):
        A = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        rho = A @ A.conj().T
        U = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
        assert abs(concurrence_mixed(U @ rho @ U.conj().T) - concurrence_mixed(rho)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(states, st.floats(0, 2 * np.pi))
def test_pure_bounds_and_global_phase(v, phi):
    c = concurrence_pure(v)
    assert 0 <= c <= 1 + 1e-12
    assert concurrence_pure(np.exp(1j * phi) * v) == pytest.approx(c, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(states, states, st.floats(0, 1))
def test_mixed_bounds(v, w, p):
    rho = p * np.outer(v, v.conj()) / np.vdot(v, v) + (1 - p) * np.outer(w, w.conj()) / np.vdot(w, w)
    assert 0 <= concurrence_mixed(rho) <= 1 + 1e-9


def test_invalid_density_matrices():
    with pytest.raises(NotADensityMatrix):
        concurrence_mixed(np.diag([1.0, 0.5, 0.0, -0.2]))
    bad = np.eye(4, dtype=complex); bad[0, 1] = 0.3
    with pytest.raises(NotADensityMatrix):
        concurrence_mixed(bad)
    with pytest.raises(NotADensityMatrix):
        concurrence_mixed(-np.eye(4))
    with pytest.raises(ValueError):
        concurrence_mixed(np.eye(2))
    with pytest.raises(ValueError):
        concurrence_mixed(np.eye(4), method="other")


def test_unnormalized_input_is_trace_normalized():
    b = BELL[2]
    assert concurrence_mixed(1e-12 * np.outer(b, b.conj())) == pytest.approx(1, abs=1e-10)
