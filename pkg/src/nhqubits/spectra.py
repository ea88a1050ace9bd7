"""Exceptional-point diagnostics for the coupled-qubit Hamiltonian family."""
import itertools
from dataclasses import dataclass
from functools import singledispatch
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .model import SystemParams, coupled_hamiltonian, single_qubit_hamiltonian
from .numerics import SpectralDecomposition, _flags, eig_general

DEFAULT_EPS = 1e-6
DEFAULT_THRESHOLD = 0.99
DEFAULT_GAP = 1e-2
VARIATION_FLOOR = 1e-9
SUBDOMINANT_RATIO = 0.05


class AmbiguousCluster(RuntimeError):
    """Raised when the EP order changes under small threshold perturbations."""


class InsufficientVariation(ValueError):
    """Raised when a branch is too flat for a power-law fit."""


@dataclass(frozen=True)
class OverlapMatrix:
    """|<psi_i|psi_j>| of unit-norm right eigenvectors."""

    values: np.ndarray
    eigenvalues: np.ndarray

    @property
    def min_offdiagonal(self):
        return float(self.values[~np.eye(len(self.values), dtype=bool)].min())

    @property
    def max_offdiagonal(self):
        return float(self.values[~np.eye(len(self.values), dtype=bool)].max())


@dataclass(frozen=True)
class SweepResult:
    axis_name: str
    axis: np.ndarray
    eigenvalues: np.ndarray
    min_overlap: np.ndarray
    max_overlap: np.ndarray


@dataclass(frozen=True)
class BranchFit:
    """Power-law fit |x(J) - x(0)| = |coefficient| J^slope for one branch.

    ``offset`` is the J = 0 reference value. ``offset_fit`` is the intercept
    of a straight-line fit of x against J**slope, kept as a diagnostic.
    """

    branch: int
    part: str
    status: str
    slope: Optional[float] = None
    coefficient: Optional[float] = None
    offset: float = 0.0
    offset_fit: Optional[float] = None


def system_eigensystem(s):
    """Eigensystem of the coupled Hamiltonian.

    For J = 0 the eigenvectors are built as Kronecker products of the
    single-qubit ones, which keeps the exact product structure inside the
    degenerate subspace.
    """
    if s.coupling != 0:
        return eig_general(coupled_hamiltonian(s))
    d1 = eig_general(single_qubit_hamiltonian(s.qubit1))
    d2 = eig_general(single_qubit_hamiltonian(s.qubit2))
    w = np.add.outer(d1.eigenvalues, d2.eigenvalues).ravel()
    V = np.einsum("ik,jl->ijkl", d1.right_vectors, d2.right_vectors).reshape(4, 4)
    W = np.einsum("ik,jl->ijkl", d1.left_vectors, d2.left_vectors).reshape(4, 4)
    order = np.lexsort((w.imag, w.real))
    V = V[:, order]
    return SpectralDecomposition(w[order], V, W[:, order], _flags(V))


def _overlap(dec):
    V = dec.right_vectors
    G = np.abs(V.conj().T @ V)
    G = 0.5 * (G + G.T)
    np.fill_diagonal(G, 1.0)
    return OverlapMatrix(np.clip(G, 0.0, 1.0), dec.eigenvalues)


@singledispatch
def overlap_matrix(H):
    """Pairwise overlaps of the unit-norm right eigenvectors of ``H``."""
    return _overlap(eig_general(np.asarray(H, dtype=complex)))


@overlap_matrix.register
def _(s: SystemParams):
    return _overlap(system_eigensystem(s))


def _point(base, axis, x):
    if axis == "omega":
        return base.with_omega(x)
    if axis == "J":
        return base.with_coupling(x)
    raise ValueError(f"axis must be 'omega' or 'J', got {axis!r}")


def sweep_eigenvalues(base, axis, values):
    """Eigenvalues along ``axis`` with tracks matched by minimal distance."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("a sweep needs at least two points")
    lam = np.empty((len(values), 4), dtype=complex)
    lo = np.empty(len(values))
    hi = np.empty(len(values))
    for k, x in enumerate(values):
        ov = overlap_matrix(_point(base, axis, x))
        w = ov.eigenvalues
        if k:
            rows, cols = linear_sum_assignment(np.abs(lam[k - 1][:, None] - w[None, :]))
            w = w[cols[np.argsort(rows)]]
        lam[k] = w
        lo[k], hi[k] = ov.min_offdiagonal, ov.max_offdiagonal
    return SweepResult(axis, values, lam, lo, hi)


def _largest_cluster(ov, threshold, gap):
    n = len(ov.eigenvalues)
    w = ov.eigenvalues
    for size in range(n, 1, -1):
        for idx in itertools.combinations(range(n), size):
            if all(
                ov.values[i, j] >= threshold and abs(w[i] - w[j]) <= gap
                for i, j in itertools.combinations(idx, 2)
            ):
                return size
    return 1


def _min_gap(s):
    ov = overlap_matrix(s)
    w = ov.eigenvalues
    scale = max(1.0, float(np.abs(w).max()))
    best = np.inf
    for i, j in itertools.combinations(range(len(w)), 2):
        d = abs(w[i] - w[j])
        # exact degeneracies of orthogonal or product partners are not EP pairs
        if ov.values[i, j] >= 0.5 and d > 1e-12 * scale:
            best = min(best, d)
    return best


def locate_ep(base, omega, window=0.01):
    """Drive amplitude near ``omega`` minimizing the eigenvalue gap of non-orthogonal pairs."""
    lo = max(omega - window, 0.0)
    f = lambda x: _min_gap(base.with_omega(x))
    if not np.isfinite(f(omega)):
        return omega
    res = minimize_scalar(f, bounds=(lo, omega + window), method="bounded", options={"xatol": 1e-12})
    return float(res.x) if res.fun <= f(omega) else omega


def ep_order(base, omega, eps=DEFAULT_EPS, threshold=DEFAULT_THRESHOLD, gap=DEFAULT_GAP,
             refine=False, window=0.01, check_ambiguity=True):
    """Number of coalescing eigenpairs near the drive amplitude ``omega``.

    The overlap matrix is evaluated at ``omega + eps`` and ``omega - eps``,
    never at the candidate point itself. The order is the largest set of
    eigenvectors whose mutual overlaps are at least ``threshold`` and whose
    eigenvalues lie within ``gap`` of each other, maximized over both sides.

    Parameters
    ----------
    refine : bool
        Snap ``omega`` to the nearby minimum of the eigenvalue gap first.

    Raises
    ------
    AmbiguousCluster
        If loosening or tightening the threshold and gap slightly changes
        the result.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if refine:
        omega = locate_ep(base, omega, window)
    sides = [overlap_matrix(base.with_omega(x)) for x in (omega - eps, omega + eps) if x >= 0]
    order = max(_largest_cluster(ov, threshold, gap) for ov in sides)
    if check_ambiguity:
        loose = max(_largest_cluster(ov, threshold - 0.002, gap * 1.1) for ov in sides)
        tight = max(_largest_cluster(ov, threshold + 0.002, gap * 0.9) for ov in sides)
        if loose != tight:
            raise AmbiguousCluster(f"order varies between {tight} and {loose} near omega={omega}")
    return order


def _sorted_branches(w):
    # pairs mirrored about the loss axis share a real part up to rounding
    return w[np.lexsort((w.imag, -np.round(w.real, 9)))]


def _tracked(base, J):
    """Eigenvalues at increasing J, labelled at the first point and tracked after."""
    lam = np.empty((len(J), 4), dtype=complex)
    for k, j in enumerate(J):
        w = system_eigensystem(base.with_coupling(j)).eigenvalues
        if k == 0:
            lam[k] = _sorted_branches(w)
        else:
            rows, cols = linear_sum_assignment(np.abs(lam[k - 1][:, None] - w[None, :]))
            lam[k] = w[cols[np.argsort(rows)]]
    return lam


def scaling_fit(base, J_values):
    """Fit |x_i(J) - x_i(0)| ~ |c| J^p for the real and imaginary parts.

    Branches are labelled by decreasing real part at the smallest J and
    followed continuously to larger J.
    A branch is reported as "constant" when its total variation is below
    1e-9 or when its deviation stays under 5% of the dominant branch at
    every J; the others are "varying" and carry slope and coefficient.

    Returns
    -------
    list of BranchFit
        Real parts of branches 0..3 followed by imaginary parts.
    """
    J = np.sort(np.asarray(J_values, dtype=float))
    if np.any(J <= 0):
        raise ValueError("J values must be positive")
    if np.log10(J.max() / J.min()) < 2:
        raise ValueError("J values must span at least two decades")
    ref = _sorted_branches(system_eigensystem(base.with_coupling(0.0)).eigenvalues)
    lam = _tracked(base, J)
    fits = []
    for part, get in (("re", np.real), ("im", np.imag)):
        dev = get(lam) - get(ref)[None, :]
        dominant = np.abs(dev).max(axis=1)
        for k in range(4):
            d = dev[:, k]
            offset = float(get(ref)[k])
            if np.ptp(d) < VARIATION_FLOOR or np.all(np.abs(d) < SUBDOMINANT_RATIO * dominant):
                fits.append(BranchFit(k, part, "constant", offset=offset))
                continue
            slope, icpt = np.polyfit(np.log(J), np.log(np.abs(d)), 1)
            coeff = float(np.sign(np.median(d)) * np.exp(icpt))
            x = J**slope
            offset_fit = float(np.polyfit(x, get(lam[:, k]), 1)[1])
            fits.append(BranchFit(k, part, "varying", float(slope), coeff, offset, offset_fit))
    return fits


def fit_branch(J_values, values, reference):
    """Power-law fit of a single branch; raises for flat data."""
    J = np.asarray(J_values, dtype=float)
    d = np.asarray(values, dtype=float) - reference
    if np.ptp(d) < VARIATION_FLOOR:
        raise InsufficientVariation("branch variation below 1e-9")
    slope, icpt = np.polyfit(np.log(J), np.log(np.abs(d)), 1)
    return float(slope), float(np.sign(np.median(d)) * np.exp(icpt))
