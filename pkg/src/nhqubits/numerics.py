"""Dense complex linear algebra for 2- and 4-dimensional operators.

All routines take and return plain numpy arrays. Vectors are 1-D, operators
are square 2-D arrays, and eigenvectors are stored as matrix columns.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DIM = 4
OVERLAP_FLAG = 0.99


class NonConvergence(ArithmeticError):
    """Raised when a result misses its residual or self-consistency tolerance."""


class DimensionTooLarge(ValueError):
    """Raised for operators larger than the supported 4x4."""


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues with right and left eigenvectors of a general matrix.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Sorted by real part, ties broken by imaginary part.
    right_vectors : ndarray, shape (n, n)
        Column ``k`` satisfies ``M v = lambda_k v`` and has unit norm.
    left_vectors : ndarray, shape (n, n)
        Column ``k`` satisfies ``M^H w = conj(lambda_k) w`` and has unit norm.
    condition_flags : ndarray of bool, shape (n,)
        True where the eigenvector overlaps another one by more than 0.99,
        which signals proximity to an exceptional point.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    condition_flags: np.ndarray

    @property
    def well_conditioned(self):
        return not bool(np.any(self.condition_flags))

    def biorthonormal_left(self):
        """Left vectors rescaled so that ``W^H V`` is the identity."""
        d = np.einsum("ik,ik->k", self.left_vectors.conj(), self.right_vectors)
        return self.left_vectors / d.conj()


def as_operator(M):
    """Validate and convert ``M`` to a complex square matrix."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > MAX_DIM:
        raise DimensionTooLarge(f"dimension {M.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def _eig_2x2(M):
    (a, b), (c, d) = M
    if b == 0 and c == 0:
        return np.array([a, d]), np.eye(2, dtype=complex)
    half_tr = (a + d) / 2
    disc = np.sqrt(((a - d) / 2) ** 2 + b * c)
    w = np.array([half_tr + disc, half_tr - disc])
    V = np.empty((2, 2), dtype=complex)
    for k, lam in enumerate(w):
        # pick the better-conditioned row of (M - lam I) to read off the null vector
        v = np.array([b, lam - a]) if abs(b) >= abs(c) else np.array([lam - d, c])
        V[:, k] = v / np.linalg.norm(v)
    return w, V


def _match_left(M, w):
    """Left eigenvectors of ``M`` paired with the eigenvalues ``w``."""
    if M.shape[0] == 2:
        wl, Wl = _eig_2x2(M.conj().T)
    else:
        wl, Wl = scipy.linalg.eig(M.conj().T)
    wl = wl.conj()
    order = []
    free = list(range(len(wl)))
    for lam in w:
        j = min(free, key=lambda i: abs(wl[i] - lam))
        free.remove(j)
        order.append(j)
    return Wl[:, order]


def _flags(V):
    G = np.abs(V.conj().T @ V)
    np.fill_diagonal(G, 0.0)
    return np.any(G > OVERLAP_FLAG, axis=1)


def eig_general(M, tol=1e-10):
    """Eigendecomposition of a general complex matrix of dimension at most 4.

    Parameters
    ----------
    M : array_like, shape (n, n)
    tol : float
        Residual tolerance relative to the spectral norm of ``M``.

    Returns
    -------
    SpectralDecomposition

    Raises
    ------
    NonConvergence
        If any right or left residual exceeds ``tol * ||M||``.
    DimensionTooLarge
        If ``n > 4``.
    """
    M = as_operator(M)
    n = M.shape[0]
    if n == 2:
        w, V = _eig_2x2(M)
        W = _match_left(M, w)
    else:
        try:
            w, W, V = scipy.linalg.eig(M, left=True, right=True)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(str(exc)) from exc
    order = np.lexsort((w.imag, w.real))
    w, V, W = w[order], V[:, order], W[:, order]
    V = V / np.linalg.norm(V, axis=0)
    W = W / np.linalg.norm(W, axis=0)

    scale = max(np.linalg.norm(M, 2), 1.0)
    res_r = np.linalg.norm(M @ V - V * w, axis=0)
    res_l = np.linalg.norm(M.conj().T @ W - W * w.conj(), axis=0)
    worst = max(res_r.max(), res_l.max())
    if worst > tol * scale:
        raise NonConvergence(f"eigen-residual {worst:.3e} exceeds {tol * scale:.3e}")
    return SpectralDecomposition(w, V, W, _flags(V))


def _expm_shifted(M, t):
    # removing the trace keeps the propagator O(1) for strongly decaying generators
    mu = np.trace(M) / M.shape[0]
    return scipy.linalg.expm(-1j * t * (M - mu * np.eye(M.shape[0]))), np.exp(-1j * mu * t)


def expm_action(M, t, v, rtol=1e-10, check=True):
    """Return ``exp(-i M t) v``.

    The exponential uses Pade scaling and squaring after removing the trace
    of ``M``, which is exact for a scalar shift. With ``check`` the result is
    compared against two successive half steps.

    Raises
    ------
    NonConvergence
        If the half-step comparison differs by more than ``rtol``.
    """
    M = as_operator(M)
    v = np.asarray(v, dtype=complex)
    if v.shape != (M.shape[0],):
        raise ValueError("vector dimension does not match the operator")
    U, phase = _expm_shifted(M, t)
    out = U @ v
    if check:
        H, _ = _expm_shifted(M, t / 2)
        alt = H @ (H @ v)
        err = np.linalg.norm(out - alt) / max(np.linalg.norm(out), np.finfo(float).tiny)
        if err > rtol:
            raise NonConvergence(f"half-step self-check error {err:.3e} exceeds {rtol:.1e}")
    return phase * out


def propagate_many(M, times, v, mode="independent", spectral_cond=1e5, shifted=False):
    """Evolve ``v`` under ``exp(-i M t)`` for every entry of ``times``.

    Parameters
    ----------
    M : array_like, shape (n, n)
    times : array_like, shape (m,)
    v : array_like, shape (n,)
    mode : {"independent", "chain"}
        "independent" evaluates each time on its own, spectrally when the
        eigenbasis is well conditioned and by a full exponential otherwise.
        "chain" steps from one grid point to the next.
    spectral_cond : float
        Largest eigenvector-matrix condition number accepted for the
        spectral route.
    shifted : bool
        Drop the scalar factor exp(-i mu t), mu = tr(M) / n. The rows then
        differ from the true states by a time-dependent scalar only, which
        keeps normalized quantities finite when the loss would underflow.

    Returns
    -------
    ndarray, shape (m, n)
        Unnormalized states, one row per time.
    """
    M = as_operator(M)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    v = np.asarray(v, dtype=complex)
    n = M.shape[0]
    mu = np.trace(M) / n
    K = M - mu * np.eye(n)
    phases = np.exp(-1j * mu * times)

    if mode == "independent":
        dec = eig_general(K)
        V = dec.right_vectors
        if dec.well_conditioned and np.linalg.cond(V) < spectral_cond:
            c = np.linalg.solve(V, v)
            amp = c[None, :] * np.exp(-1j * np.outer(times, dec.eigenvalues))
            out = amp @ V.T
        else:
            out = np.array([scipy.linalg.expm(-1j * t * K) @ v for t in times])
    elif mode == "chain":
        out = np.empty((len(times), n), dtype=complex)
        cache = {}
        state = scipy.linalg.expm(-1j * times[0] * K) @ v if len(times) else v
        prev = times[0] if len(times) else 0.0
        for i, t in enumerate(times):
            dt = t - prev
            if dt != 0.0:
                key = round(dt, 15)
                if key not in cache:
                    cache[key] = scipy.linalg.expm(-1j * dt * K)
                state = cache[key] @ state
            out[i] = state
            prev = t
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out if shifted else out * phases[:, None]


def partial_trace(rho, keep):
    """Reduced state of one qubit of a two-qubit operator.

    Parameters
    ----------
    rho : array_like, shape (4, 4)
        Operator in the ordered basis ff, fe, ef, ee.
    keep : {1, 2}
        Qubit to keep.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 operator, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ijkj->ik", r)
    if keep == 2:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 1 or 2")
