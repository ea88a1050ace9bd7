import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nhqubits.model import SystemParams, coupled_hamiltonian, QubitParams, single_qubit_hamiltonian
from nhqubits.numerics import (
    DimensionTooLarge,
    NonConvergence,
    eig_general,
    expm_action,
    partial_trace,
    propagate_many,
)

# eigenvalues of the coupled Hamiltonian at gamma=6, omega=1.6, J=1e-3 and the
# state exp(-iHt)|ff> at t=5.325, both from 40-digit mpmath
EIG_REF = np.array([
    -1.10940440533151 - 3j,
    -0.007258415396179642 - 3j,
    -0.001 - 3j,
    1.1176628207276895 - 3j,
])
PSI_REF = np.array([
    2.9719024447611283e-08 + 2.9907422167867544e-08j,
    2.9385587827727134e-08 + 3.0024444544013654e-08j,
    2.9385587827727134e-08 + 3.0024444544013654e-08j,
    -2.9271817382557213e-08 - 2.9927359861226194e-08j,
])

H_REF = coupled_hamiltonian(SystemParams.identical(6.0, 1.6, 1e-3))
FF = np.array([1, 0, 0, 0], dtype=complex)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
complex_entries = st.builds(complex, finite, finite)


def random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_identity_eigenvalues():
    d = eig_general(np.eye(4))
    assert np.allclose(d.eigenvalues, 1)
    assert np.allclose(np.linalg.norm(d.right_vectors, axis=0), 1)


def test_diagonal_eigenvalues_exact():
    M = np.diag([1 + 2j, 3, -1j, 0])
    d = eig_general(M)
    assert sorted(d.eigenvalues, key=lambda z: (z.real, z.imag)) == list(d.eigenvalues)
    assert set(d.eigenvalues) == {1 + 2j, 3, -1j, 0}


def test_single_qubit_closed_form():
    gamma, omega = 6.0, 1.6
    eta = np.sqrt(16 * omega**2 - gamma**2)
    d = eig_general(single_qubit_hamiltonian(QubitParams(0.0, gamma, omega)))
    expected = np.sort_complex(np.array([(-1j * gamma - eta) / 4, (-1j * gamma + eta) / 4]))
    assert np.allclose(d.eigenvalues, expected, atol=1e-12, rtol=0)


def test_coupled_eigenvalues_match_high_precision():
    assert np.allclose(eig_general(H_REF).eigenvalues, EIG_REF, atol=1e-12, rtol=0)


def test_random_residuals_and_order():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        M = random_matrix(rng, 4)
        d = eig_general(M)
        scale = np.linalg.norm(M, 2)
        V, W, w = d.right_vectors, d.left_vectors, d.eigenvalues
        assert np.linalg.norm(M @ V - V * w, axis=0).max() <= 1e-10 * scale
        assert np.linalg.norm(M.conj().T @ W - W * w.conj(), axis=0).max() <= 1e-10 * scale
        assert np.all(np.diff(w.real) >= 0)


def test_left_right_biorthogonal_off_diagonal():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(300):
        d = eig_general(random_matrix(rng, 4))
        w = d.eigenvalues
        gaps = np.abs(w[:, None] - w[None, :]) + np.eye(4)
        if gaps.min() <= 1e-6:
            continue
        G = np.abs(d.left_vectors.conj().T @ d.right_vectors)
        assert G[~np.eye(4, dtype=bool)].max() <= 1e-8
        checked += 1
    assert checked > 250


def test_biorthonormal_left_gives_identity():
    d = eig_general(H_REF)
    assert np.allclose(d.biorthonormal_left().conj().T @ d.right_vectors, np.eye(4), atol=1e-10)


def test_dimension_and_shape_errors():
    with pytest.raises(DimensionTooLarge):
        eig_general(np.eye(5))
    with pytest.raises(ValueError):
        eig_general(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eig_general(np.array([[np.nan, 0], [0, 1]]))


def test_near_defective_matrix_is_flagged():
    d = eig_general(np.array([[0, 1], [1e-14, 0]]))
    assert not d.well_conditioned


def test_tight_tolerance_raises():
    # a Jordan-like block perturbed at 1e-13 cannot reach a 1e-18 residual
    M = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1e-13, 0, 0, 1]], dtype=complex)
    with pytest.raises(NonConvergence):
        eig_general(M, tol=1e-18)


def _rk4(M, v, t, h):
    f = lambda x: -1j * (M @ x)
    n = int(round(t / h))
    for _ in range(n):
        k1 = f(v)
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def test_expm_matches_runge_kutta_oracle():
    out = expm_action(H_REF, 5.325, FF)
    ref = _rk4(H_REF, FF, 5.325, 1e-4)
    assert np.linalg.norm(out - ref) / np.linalg.norm(ref) <= 1e-8


def test_expm_matches_high_precision_state():
    out = expm_action(H_REF, 5.325, FF)
    assert np.linalg.norm(out - PSI_REF) / np.linalg.norm(PSI_REF) <= 1e-9


def test_expm_zero_generator_and_diagonal():
    v = np.array([1, 2j])
    assert np.array_equal(expm_action(np.zeros((2, 2)), 3.0, v), v)
    a, b = 0.3 - 0.1j, -1.2
    out = expm_action(np.diag([a, b]), 2.0, v)
    assert np.allclose(out, [np.exp(-2j * a), 2j * np.exp(-2j * b)], rtol=1e-13)


def test_expm_dimension_mismatch():
    with pytest.raises(ValueError):
        expm_action(np.eye(4), 1.0, np.ones(2))


@settings(max_examples=60, deadline=None)
@given(arrays(complex, (4, 4), elements=complex_entries),
       st.floats(0, 3), st.floats(0, 3))
def test_expm_semigroup(M, t1, t2):
    M = M * 0.3
    v = np.array([1, 0.5, -0.2j, 0.1])
    joint = expm_action(M, t1 + t2, v, check=False)
    split = expm_action(M, t2, expm_action(M, t1, v, check=False), check=False)
    assert np.linalg.norm(joint - split) <= 1e-9 * max(np.linalg.norm(joint), 1e-300)


def test_propagate_modes_agree():
    t = np.linspace(0, 8, 81)
    a = propagate_many(H_REF, t, FF)
    b = propagate_many(H_REF, t, FF, mode="chain")
    ref = np.array([expm_action(H_REF, ti, FF) for ti in t])
    norms = np.linalg.norm(ref, axis=1)[:, None]
    assert np.abs((a - ref) / norms).max() <= 1e-9
    assert np.abs((b - ref) / norms).max() <= 1e-9


def test_propagate_near_exceptional_point_uses_fallback():
    H = coupled_hamiltonian(SystemParams.identical(6.0, 1.5, 0.0))
    t = np.array([0.5, 2.0])
    out = propagate_many(H, t, FF)
    ref = np.array([expm_action(H, ti, FF) for ti in t])
    assert np.allclose(out, ref, rtol=1e-10, atol=0)


def test_shifted_rows_differ_by_scalar_only():
    t = np.array([0.0, 50.0, 400.0])
    x = propagate_many(H_REF, t, FF, shifted=True)
    assert np.all(np.isfinite(x)) and np.all(np.linalg.norm(x, axis=1) > 1e-3)
    raw = propagate_many(H_REF, t[:2], FF)
    phase = np.exp(-1j * np.trace(H_REF) / 4 * t[:2])
    assert np.allclose(raw, x[:2] * phase[:, None], rtol=1e-12, atol=0)


def test_propagate_unknown_mode():
    with pytest.raises(ValueError):
        propagate_many(H_REF, [1.0], FF, mode="magic")


def test_partial_trace_examples():
    rho = np.zeros((4, 4)); rho[0, 0] = 1
    assert np.array_equal(partial_trace(rho, 1), [[1, 0], [0, 0]])
    assert np.array_equal(partial_trace(rho, 2), [[1, 0], [0, 0]])
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    for keep in (1, 2):
        assert np.allclose(partial_trace(np.outer(bell, bell), keep), np.eye(2) / 2)


@settings(max_examples=100, deadline=None)
@given(arrays(complex, 2, elements=complex_entries), arrays(complex, 2, elements=complex_entries))
def test_partial_trace_of_products(v, w):
    if np.linalg.norm(v) < 1e-3 or np.linalg.norm(w) < 1e-3:
        return
    v, w = v / np.linalg.norm(v), w / np.linalg.norm(w)
    psi = np.kron(v, w)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(partial_trace(rho, 1), np.outer(v, v.conj()), atol=1e-12)
    assert np.allclose(partial_trace(rho, 2), np.outer(w, w.conj()), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(complex, (4, 4), elements=complex_entries), arrays(complex, (4, 4), elements=complex_entries),
       st.floats(-2, 2))
def test_partial_trace_linear_and_trace_preserving(A, B, c):
    for keep in (1, 2):
        assert np.allclose(partial_trace(A + c * B, keep), partial_trace(A, keep) + c * partial_trace(B, keep))
        assert abs(np.trace(partial_trace(A, keep)) - np.trace(A)) <= 1e-12 * max(1, np.abs(A).sum())


def test_partial_trace_bad_input():
    with pytest.raises(ValueError):
        partial_trace(np.eye(2), 1)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), 3)
