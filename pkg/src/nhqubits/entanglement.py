"""Concurrence of pure and mixed two-qubit states."""
import numpy as np

_S = 1.0 / np.sqrt(2.0)

#: Bell states e1..e4 as rows, in the basis ff, fe, ef, ee.
BELL = np.array(
    [
        [_S, 0, 0, _S],
        [1j * _S, 0, 0, -1j * _S],
        [0, 1j * _S, 1j * _S, 0],
        [0, _S, -_S, 0],
    ],
    dtype=complex,
)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)


class ZeroState(ValueError):
    """Raised when a state vector is identically zero."""


class NotADensityMatrix(ValueError):
    """Raised when an operator is not Hermitian or not positive semidefinite."""


def _vector(psi):
    v = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    if v.shape != (4,):
        raise ValueError(f"expected 4 amplitudes, got shape {v.shape}")
    if not np.any(v):
        raise ZeroState("the zero vector has no concurrence")
    return v


def concurrence_pure(psi):
    """2|alpha delta - beta zeta| / ||psi||^2, valid for unnormalized input."""
    a, b, z, d = v = _vector(psi)
    return float(2.0 * abs(a * d - b * z) / np.vdot(v, v).real)


def bell_projection(psi):
    """Coefficients c_j = <e_j|psi> on the Bell basis."""
    return BELL.conj() @ _vector(psi)


def _density(rho, tol):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise NotADensityMatrix("non-finite entries")
    tr = np.trace(rho)
    if tr.real <= 0:
        raise NotADensityMatrix("trace must be positive")
    rho = rho / tr
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NotADensityMatrix("operator is not Hermitian")
    return 0.5 * (rho + rho.conj().T)


def _psd_sqrt(rho, tol):
    w, V = np.linalg.eigh(rho)
    if w.min() < -tol:
        raise NotADensityMatrix(f"negative eigenvalue {w.min():.3e}")
    # eigenvalues at rounding level are zeroed so square roots do not amplify noise
    w = np.where(w > 16 * np.finfo(float).eps * w.max(), w, 0.0)
    return (V * np.sqrt(w)) @ V.conj().T


def concurrence_mixed(rho, tol=1e-8, method="sqrt"):
    """Wootters concurrence of a two-qubit density matrix.

    The input is divided by its trace first, so unnormalized operators from
    lossy evolution are accepted.

    Parameters
    ----------
    rho : array_like, shape (4, 4)
    tol : float
        Largest tolerated Hermiticity or positivity violation.
    method : {"sqrt", "eigs"}
        "sqrt" takes the singular values of sqrt(rho) (Y x Y) sqrt(rho)*,
        which equal the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)).
        "eigs" uses square roots of the eigenvalues of rho rho~.
    """
    rho = _density(rho, tol)
    if method == "sqrt":
        R = _psd_sqrt(rho, tol)
        tau = np.linalg.svd(R @ YY @ R.conj(), compute_uv=False)
    elif method == "eigs":
        _psd_sqrt(rho, tol)
        lam = np.linalg.eigvals(rho @ YY @ rho.conj() @ YY).real
        tau = np.sqrt(np.clip(lam, 0.0, None))
    else:
        raise ValueError(f"unknown method {method!r}")
    tau = np.sort(tau)[::-1]
    return float(max(0.0, tau[0] - tau[1:].sum()))
