import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhqubits import spectra as S
from nhqubits.model import SystemParams, coupled_hamiltonian
from nhqubits.numerics import eig_general

AT_EP = SystemParams.identical(6.0, 1.5, 0.0)


def test_hermitian_eigenvectors_orthogonal():
    for J in (0.0, 1e-3, 0.1):
        assert S.overlap_matrix(SystemParams.identical(0.0, 1.6, J)).max_offdiagonal <= 1e-8


def test_overlaps_near_ep_coalesce():
    ov = S.overlap_matrix(SystemParams.identical(6.0, 1.5 + 1e-6, 0.0))
    assert ov.min_offdiagonal >= 0.99


def test_overlaps_far_from_ep():
    ov = S.overlap_matrix(SystemParams.identical(6.0, 3.0, 0.0))
    assert ov.max_offdiagonal <= 0.6
    # product structure: single-qubit overlap 1/2 squared for the doubly flipped pair
    assert np.allclose(np.sort(ov.values[0]), [0.25, 0.5, 0.5, 1.0], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 10), st.floats(0.1, 4), st.floats(0, 0.1))
def test_overlap_matrix_properties(g, o, J):
    ov = S.overlap_matrix(SystemParams.identical(g, o, J))
    assert np.array_equal(ov.values, ov.values.T)
    assert np.all(np.diag(ov.values) == 1)
    assert np.all((ov.values >= 0) & (ov.values <= 1))


def test_overlap_matrix_accepts_arrays():
    H = coupled_hamiltonian(SystemParams.identical(6.0, 1.6, 1e-3))
    a = S.overlap_matrix(H)
    b = S.overlap_matrix(SystemParams.identical(6.0, 1.6, 1e-3))
    assert np.allclose(a.values, b.values, atol=1e-10)


def test_system_eigensystem_product_route():
    d = S.system_eigensystem(SystemParams.identical(6.0, 1.6, 0.0))
    H = coupled_hamiltonian(SystemParams.identical(6.0, 1.6, 0.0))
    V = d.right_vectors
    assert np.abs(H @ V - V * d.eigenvalues).max() <= 1e-12
    assert np.allclose(np.sort_complex(d.eigenvalues), np.sort_complex(eig_general(H).eigenvalues), atol=1e-12)


def test_ep_orders():
    assert S.ep_order(AT_EP, 1.5) == 4
    assert S.ep_order(AT_EP.with_coupling(1e-8), 1.5) == 3
    assert S.ep_order(AT_EP.with_coupling(1e-3), 1.506, refine=True) == 2
    assert S.ep_order(SystemParams.identical(0.0, 1.5, 0.0), 1.5) == 1


def test_ep_order_does_not_grow_with_coupling():
    orders = [S.ep_order(AT_EP.with_coupling(J), 1.5) for J in (0.0, 1e-8, 1e-3)]
    assert orders == sorted(orders, reverse=True)


def test_ep_order_rejects_bad_eps():
    with pytest.raises(ValueError):
        S.ep_order(AT_EP, 1.5, eps=0)


def test_ambiguous_cluster_raised_on_the_edge():
    # gap tuned to sit exactly on a pair separation at eps
    ov = S.overlap_matrix(AT_EP.with_omega(1.5 + 1e-6))
    w = ov.eigenvalues
    edge = float(np.abs(w[:, None] - w[None, :]).max())
    with pytest.raises(S.AmbiguousCluster):
        S.ep_order(AT_EP, 1.5, gap=edge)
    assert S.ep_order(AT_EP, 1.5, gap=edge, check_ambiguity=False) in (3, 4)


def test_locate_ep_finds_gap_minimum():
    x = S.locate_ep(AT_EP.with_coupling(1e-3), 1.506)
    assert abs(x - 1.506) <= 0.01
    assert S._min_gap(AT_EP.with_coupling(1e-3).with_omega(x)) <= S._min_gap(
        AT_EP.with_coupling(1e-3).with_omega(1.506))


def test_decoupled_sweep_meets_at_ep():
    r = S.sweep_eigenvalues(AT_EP, "omega", np.linspace(1.0, 2.0, 101))
    i = np.argmin(np.abs(r.axis - 1.5))
    assert np.abs(r.eigenvalues[i] + 3j).max() <= 1e-12
    assert r.eigenvalues.shape == (101, 4) and r.min_overlap.shape == (101,)


def test_hermitian_sweep_is_real():
    r = S.sweep_eigenvalues(SystemParams.identical(0.0, 1.5, 1e-3), "J", [0.0, 1e-3, 1e-2, 0.1])
    assert np.abs(r.eigenvalues.imag).max() <= 1e-12


def test_sweep_tracks_are_continuous_away_from_ep():
    x = np.linspace(1.6, 2.5, 181)
    r = S.sweep_eigenvalues(AT_EP.with_coupling(1e-3), "omega", x)
    step = np.abs(np.diff(r.eigenvalues, axis=0)).max()
    assert step <= 2 * 4 * (x[1] - x[0])


def test_sweep_errors():
    with pytest.raises(ValueError):
        S.sweep_eigenvalues(AT_EP, "omega", [1.5])
    with pytest.raises(ValueError):
        S.sweep_eigenvalues(AT_EP, "gamma", [1.0, 2.0])


def test_scaling_fit_cube_root():
    fits = S.scaling_fit(AT_EP, np.logspace(-6, -2, 9))
    varying = [f for f in fits if f.status == "varying"]
    assert len(varying) == 5
    for f in varying:
        assert abs(f.slope - 1 / 3) <= 0.02
    re = {f.branch: f for f in fits if f.part == "re"}
    assert re[0].coefficient == pytest.approx(2.09, abs=0.05)
    assert re[2].coefficient == pytest.approx(-1.02, abs=0.05)
    assert all(f.offset == -3.0 for f in fits if f.part == "im")


def test_scaling_fit_errors():
    with pytest.raises(ValueError):
        S.scaling_fit(AT_EP, [0.0, 1e-3, 1e-2])
    with pytest.raises(ValueError):
        S.scaling_fit(AT_EP, [1e-4, 1e-3])


def test_fit_branch():
    J = np.logspace(-6, -2, 9)
    slope, c = S.fit_branch(J, 2.0 * J**0.5 + 1.0, 1.0)
    assert slope == pytest.approx(0.5) and c == pytest.approx(2.0)
    with pytest.raises(S.InsufficientVariation):
        S.fit_branch(J, np.full_like(J, 3.0), 3.0)
