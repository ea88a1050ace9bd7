"""First-order biorthogonal perturbation theory in the coupling J.

Everything here assumes two identical resonant qubits (decay ``gamma``,
drive ``omega``) in the symmetry-preserving phase, eta > 0. Right states are
stored as matrix columns. Left states are stored so that the dual pairing
is ``left[:, k].conj() @ x``; because the Hamiltonian is complex symmetric
the dual of a right state ``v`` is ``conj(v)``, i.e. the bra is the plain
transpose of the ket.
"""
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PureState, Trajectory, _vec
from .model import coupling_operator

EP_TOL = 1e-9
SQRT2 = math.sqrt(2.0)


class AtExceptionalPoint(ValueError):
    """Raised when eta vanishes and the biorthogonal states diverge."""


def _eta(gamma, omega):
    e2 = 16.0 * omega**2 - gamma**2
    if abs(e2) < EP_TOL**2:
        raise AtExceptionalPoint(f"|eta| below {EP_TOL} at gamma={gamma}, omega={omega}")
    if e2 < 0:
        raise ValueError("perturbation theory is implemented for the preserving phase only")
    return math.sqrt(e2)


@dataclass(frozen=True)
class UnperturbedBasis:
    """Biorthonormal eigenbasis of the uncoupled pair.

    Labels follow the order ``("--", "++", "-+", "+-")``.
    """

    labels: tuple
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    def gram(self):
        return self.left.conj().T @ self.right


@dataclass(frozen=True)
class DegenerateLift:
    """Coupling restricted to the degenerate pair and its eigenbasis."""

    submatrix: np.ndarray
    eigenvalues: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray


@dataclass(frozen=True)
class BiorthogonalBasis:
    """Perturbed eigenvalues and states, labels ``("++", "--", "1", "2")``."""

    labels: tuple
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    def gram(self):
        return self.left.conj().T @ self.right

    def biorthogonality_residual(self):
        return float(np.max(np.abs(self.gram() - np.eye(4))))

    def completeness_residual(self):
        return float(np.max(np.abs(self.right @ self.left.conj().T - np.eye(4))))


@dataclass(frozen=True)
class EnergySeparations:
    d_1_mm: float
    d_2_mm: float
    d_pp_1: float
    d_pp_2: float


def unperturbed_basis(gamma, omega):
    """Closed-form biorthonormal eigenstates of the uncoupled Hamiltonian."""
    e = _eta(gamma, omega)
    g, O = gamma, omega
    right = np.array(
        [
            [e - 1j * g, -4 * O, -4 * O, e + 1j * g],
            [e + 1j * g, 4 * O, 4 * O, e - 1j * g],
            [-4 * O, 1j * g - e, 1j * g + e, 4 * O],
            [-4 * O, 1j * g + e, 1j * g - e, 4 * O],
        ]
    ).T / (2 * e)
    lam = np.array([-(1j * g + e) / 2, -(1j * g - e) / 2, -1j * g / 2, -1j * g / 2])
    return UnperturbedBasis(("--", "++", "-+", "+-"), lam, right, right.conj())


def product_states(gamma, omega):
    """Unit-norm product eigenvectors of the uncoupled pair.

    Valid on both sides of the exceptional point, including at it, and
    ordered ``("--", "++", "-+", "+-")``. In the broken phase eta is
    imaginary and the labels follow the same algebraic expressions.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    e = complex(np.sqrt(complex(16.0 * omega**2 - gamma**2)))
    g, O = gamma, omega
    s = 32 * O**2
    vecs = np.array(
        [
            np.array([-((g + 1j * e) ** 2), 4 * O * (1j * g - e), 4 * O * (1j * g - e), 16 * O**2]) / s,
            np.array([(1j * g + e) ** 2, 4 * O * (1j * g + e), 4 * O * (1j * g + e), 16 * O**2]) / s,
            np.array([-4 * O, 1j * g - e, 1j * g + e, 4 * O]) / (8 * O),
            np.array([-4 * O, 1j * g + e, 1j * g - e, 4 * O]) / (8 * O),
        ]
    ).T
    return vecs / np.linalg.norm(vecs, axis=0)


def degenerate_lift(gamma, omega, J):
    """Diagonalize the coupling inside the degenerate ``-+``, ``+-`` pair."""
    b = unperturbed_basis(gamma, omega)
    V = coupling_operator(J)
    idx = [2, 3]
    sub = b.left[:, idx].conj().T @ V @ b.right[:, idx]
    # the block has the form [[a, c], [c, a]] so (1, -1) and (1, 1) diagonalize it
    a, c = sub[0, 0], sub[0, 1]
    psi1 = (b.right[:, 2] - b.right[:, 3]) / SQRT2
    psi2 = (b.right[:, 2] + b.right[:, 3]) / SQRT2
    return DegenerateLift(sub, np.array([a - c, a + c]), psi1, psi2)


def perturbed_eigenvalues(gamma, omega, J):
    """(Lambda_pp, Lambda_mm, Lambda_1, Lambda_2)."""
    e = _eta(gamma, omega)
    g, O = gamma, omega
    shift = 8 * J * O**2 / e**2
    return np.array(
        [
            -0.5j * g + e / 2 + shift,
            -0.5j * g - e / 2 + shift,
            -J - 0.5j * g,
            -0.5j * g - J * g**2 / e**2,
        ]
    )


def perturbed_eigensystem(gamma, omega, J):
    """Eigenvalues and first-order eigenstates of the coupled pair."""
    e = _eta(gamma, omega)
    g, O = gamma, omega
    k = 8 * J * O**2
    mid_pp = 4 * O * (e**3 + 2 * J * e**2 - 24 * J * O**2)
    mid_mm = -4 * O * (e**3 - 2 * J * e**2 + 24 * J * O**2)
    psi_pp = np.array(
        [e**3 * (e + 1j * g) - k * (e + 3j * g), mid_pp, mid_pp, e**3 * (e - 1j * g) - k * (e - 3j * g)]
    ) / (2 * e**4)
    psi_mm = np.array(
        [e**3 * (e - 1j * g) + k * (e - 3j * g), mid_mm, mid_mm, e**3 * (e + 1j * g) + k * (e + 3j * g)]
    ) / (2 * e**4)
    psi_1 = np.array([0, -1, 1, 0]) / SQRT2
    psi_2 = np.array(
        [-4 * O * (e**2 + 2j * J * g), 1j * g * e**2, 1j * g * e**2, 4 * O * (e**2 - 2j * J * g)]
    ) / (SQRT2 * e**3)
    right = np.array([psi_pp, psi_mm, psi_1, psi_2], dtype=complex).T
    lam = perturbed_eigenvalues(gamma, omega, J)
    return BiorthogonalBasis(("++", "--", "1", "2"), lam, right, right.conj())


def approximate_eigensystem(gamma, omega, J):
    """Perturbed eigenvalues with the leading-order simplified states.

    Uses Psi_mm ~ psi_mm + c psi_pp, Psi_pp ~ psi_pp - c psi_mm with
    c = 8 J omega^2 / eta^3, and Psi_2 ~ psi_2.
    """
    e = _eta(gamma, omega)
    b = unperturbed_basis(gamma, omega)
    c = 8 * J * omega**2 / e**3
    mm, pp = b.right[:, 0], b.right[:, 1]
    lift = degenerate_lift(gamma, omega, J)
    right = np.array([pp - c * mm, mm + c * pp, lift.psi1, lift.psi2]).T
    return BiorthogonalBasis(("++", "--", "1", "2"), perturbed_eigenvalues(gamma, omega, J), right, right.conj())


def energy_separations(gamma, omega, J):
    e = _eta(gamma, omega)
    a = J * (3 * e**2 + gamma**2) / e**2
    b = J * (e**2 + 3 * gamma**2) / e**2
    return EnergySeparations(d_1_mm=(e - a) / 2, d_2_mm=(e - b) / 2, d_pp_1=(e + a) / 2, d_pp_2=(e + b) / 2)


def perturbative_trajectory(psi0, t_grid, basis):
    """sum_k <Psi~_k|psi0> exp(-i t Lambda_k) |Psi_k> on a time grid."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    c = basis.left.conj().T @ _vec(psi0)
    amp = c[None, :] * np.exp(-1j * np.outer(t, basis.eigenvalues))
    return Trajectory(t, amp @ basis.right.T)


def perturbative_evolve(psi0, t, basis):
    """Raw and normalized perturbative state at a single time."""
    raw = PureState(perturbative_trajectory(psi0, [t], basis).raw[0])
    return raw, raw.normalize()


def concurrence_closed_form(gamma, omega, J, t, form="main"):
    """Closed-form concurrence for the initial state |ff>.

    Parameters
    ----------
    form : {"main", "ratio"}
        "main" evaluates |16 eta^2 omega^2 (exp(i t chi2) - 1) / B|;
        "ratio" evaluates the equivalent 2|A / B'| expression.
    """
    e = _eta(gamma, omega)
    g, O = gamma, omega
    t = np.asarray(t, dtype=float)
    chi2 = J * (e**2 + 3 * g**2) / e**2
    osc = np.cos(t * chi2 / 2) * (g * np.cos(t * e / 2) - e * np.sin(t * e / 2))
    if form == "main":
        B = 16 * O**2 * (g**2 + 32 * O**2) + g * (
            g * (g**2 - e**2) * np.cos(t * e) - 2 * g**2 * e * np.sin(t * e) - 64 * O**2 * osc
        )
        return np.abs(16 * e**2 * O**2 * (np.exp(1j * t * chi2) - 1) / B)
    if form == "ratio":
        s = g**2 + e**2
        A = e**2 * s * (np.exp(1j * t * chi2) - 1)
        E = np.exp(1j * t * e)
        B = g**2 * (g**2 - e**2) * (1 + E**2) + 2 * E * (
            s * (3 * g**2 + 2 * e**2) - 4 * g * s * osc - 2 * g**3 * e * np.sin(t * e)
        )
        return 2 * np.abs(A / B)
    raise ValueError(f"unknown form {form!r}")


def approximate_amplitudes(gamma, omega, J, t):
    """Approximate amplitudes (alpha', beta', zeta', delta') for |ff> at time t."""
    e = _eta(gamma, omega)
    g, O = gamma, omega
    t = np.asarray(t, dtype=float)
    s = g**2 + e**2
    pref = np.exp(-(t / 2) * (g + 1j * e + 1j * J * (1 + g**2 / e**2)))
    E = np.exp(1j * t * e)
    slow = np.exp(0.5j * t * (e + J * (1 + 3 * g**2 / e**2)))
    alpha = pref / (16 * e**8) * (
        4 * (E - 1) * J * e**3 * s**2
        + J**2 * s**2 * ((e - 1j * g) ** 2 + E * (e + 1j * g) ** 2)
        + 4 * e**6 * ((e**2 - g**2) * (E + 1) - 2j * g * e * (E - 1) + 2 * s * slow)
    )
    beta = O * pref / (4 * e**8) * (
        4 * e**6 * (1j * g * (1 + E - 2 * slow) - e * (E - 1))
        + J**2 * s**2 * ((e + 1j * g) * E - e + 1j * g)
        + 4j * J * g * e**3 * s * (1 - E)
    )
    delta = 4 * O**2 * pref / e**8 * (
        e**6 * (1 + E - 2 * slow) + J * e**3 * (e**2 - g**2) * (E - 1) + 64 * J**2 * O**4 * (E + 1)
    )
    return alpha, beta, beta, delta


def differential_phase_analytic(gamma, omega, J, t):
    """pi/2 - Arg(beta') from the approximate amplitudes."""
    _, beta, _, _ = approximate_amplitudes(gamma, omega, J, t)
    return np.pi / 2 - np.angle(beta)
