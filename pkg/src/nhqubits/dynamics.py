"""Exact evolution under the coupled Hamiltonian and its diagnostics.

States are propagated with the full 4x4 generator. Raw (unnormalized)
amplitudes keep the loss record, while phases, concurrence and Bloch
vectors are computed from the normalized state.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import coupled_hamiltonian, single_qubit_hamiltonian
from .numerics import expm_action, partial_trace, propagate_many

BASIS_LABELS = ("ff", "fe", "ef", "ee")
PHASE_FLOOR = 1e-12

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class AmplitudesNotEqual(ValueError):
    """Raised when the equal-amplitude shortcut for concurrence does not apply."""


@dataclass(frozen=True)
class PureState:
    """Two-qubit amplitudes (alpha, beta, zeta, delta) on ff, fe, ef, ee."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def basis(cls, label):
        v = np.zeros(4, dtype=complex)
        v[BASIS_LABELS.index(label)] = 1.0
        return cls(v)

    @classmethod
    def parse(cls, text):
        """Parse ``ff``, ``fe``, ``ef``, ``ee`` or ``custom:a,b,c,d``."""
        if text in BASIS_LABELS:
            return cls.basis(text)
        if text.startswith("custom:"):
            parts = text[len("custom:"):].split(",")
            if len(parts) != 4:
                raise ValueError("custom state needs four comma-separated amplitudes")
            v = np.array([complex(p.strip().replace(" ", "")) for p in parts])
            if not np.any(v):
                raise ValueError("custom state must be nonzero")
            return cls(v)
        raise ValueError(f"unknown state {text!r}")

    alpha = property(lambda self: self.amplitudes[0])
    beta = property(lambda self: self.amplitudes[1])
    zeta = property(lambda self: self.amplitudes[2])
    delta = property(lambda self: self.amplitudes[3])

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @property
    def normalized(self):
        return abs(self.norm - 1.0) <= 1e-12

    def normalize(self):
        return PureState(self.amplitudes / self.norm)

    def projector(self):
        return np.outer(self.amplitudes, self.amplitudes.conj())


def _vec(psi0):
    return psi0.amplitudes if isinstance(psi0, PureState) else np.asarray(psi0, dtype=complex)


@dataclass(frozen=True)
class Trajectory:
    """Raw amplitudes on a time grid, one row per time.

    ``shifted`` optionally holds the same states up to a scalar per row;
    when given it is used for every normalized quantity.
    """

    t: np.ndarray
    raw: np.ndarray
    shifted: Optional[np.ndarray] = None

    @property
    def norms(self):
        return np.linalg.norm(self.raw, axis=1)

    @property
    def normalized(self):
        x = self.raw if self.shifted is None else self.shifted
        return x / np.linalg.norm(x, axis=1)[:, None]

    @property
    def concurrence(self):
        a, b, z, d = self.normalized.T
        return 2.0 * np.abs(a * d - b * z)

    def state(self, i):
        return PureState(self.raw[i])


@dataclass(frozen=True)
class PhaseRecord:
    t: float
    moduli: np.ndarray
    phases: np.ndarray
    relative: np.ndarray
    dphi: float
    phase_defined: np.ndarray


@dataclass(frozen=True)
class BlochPoint:
    t: float
    x: float
    y: float
    z: float

    @property
    def radius(self):
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


def phase_distance(a, b):
    """Distance between two angles on the circle."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi))
    return np.minimum(d, 2 * np.pi - d)


def evolve_exact(s, psi0, t):
    """State at time ``t`` under exp(-iHt).

    Returns
    -------
    (PureState, PureState)
        The raw state and its normalized companion.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    raw = PureState(expm_action(coupled_hamiltonian(s), t, _vec(psi0)))
    return raw, raw.normalize()


def _factor(v):
    """Split a product vector into its two single-qubit factors."""
    M = v.reshape(2, 2)
    i, j = np.unravel_index(np.argmax(np.abs(M)), M.shape)
    return M[:, j], M[i, :] / M[i, j]


def trajectory(s, psi0, t_grid, mode="independent"):
    """Exact raw states on ``t_grid`` (see ``numerics.propagate_many``)."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    H = coupled_hamiltonian(s)
    v = _vec(psi0)
    if s.coupling == 0 and abs(v[0] * v[3] - v[1] * v[2]) == 0:
        # decoupled qubits from a product state: propagate each factor so the
        # product structure survives rounding
        a, b = _factor(v)
        x1 = propagate_many(single_qubit_hamiltonian(s.qubit1), t, a, mode=mode, shifted=True)
        x2 = propagate_many(single_qubit_hamiltonian(s.qubit2), t, b, mode=mode, shifted=True)
        x = np.einsum("ti,tj->tij", x1, x2).reshape(len(t), 4)
    else:
        x = propagate_many(H, t, v, mode=mode, shifted=True)
    phase = np.exp(-1j * np.trace(H) / 4 * t)
    return Trajectory(t, x * phase[:, None], x)


def default_grid(t_max=8.0, points=2000):
    return np.linspace(0.0, t_max, points)


def phase_records(t, states):
    """Phase diagnostics for normalized ``states`` of shape (n, 4)."""
    out = []
    for ti, v in zip(np.atleast_1d(t), np.atleast_2d(states)):
        mod = np.abs(v)
        ph = np.angle(v)
        rel = ph[1:] - ph[0]
        dphi = ph[0] + ph[3] - ph[1] - ph[2]
        out.append(PhaseRecord(float(ti), mod, ph, rel, float(dphi), mod >= PHASE_FLOOR))
    return out


def phase_trace(s, psi0, t_grid):
    """Moduli and principal-value phases of the normalized exact state."""
    tr = trajectory(s, psi0, t_grid)
    return phase_records(tr.t, tr.normalized)


def equal_amplitude_concurrence(record, tol=0.02):
    """|sin(dphi / 2)|, valid when all four moduli agree within ``tol``."""
    spread = float(np.ptp(record.moduli))
    if spread > tol:
        raise AmplitudesNotEqual(f"modulus spread {spread:.3g} exceeds {tol}")
    return abs(math.sin(record.dphi / 2.0))


def bloch_vector(rho2):
    """Bloch components of a 2x2 state after trace normalization."""
    rho2 = rho2 / np.trace(rho2)
    return tuple(float(np.trace(rho2 @ p).real) for p in _PAULI)


def bloch_points(t, states, keep=1):
    out = []
    for ti, v in zip(np.atleast_1d(t), np.atleast_2d(states)):
        x, y, z = bloch_vector(partial_trace(np.outer(v, v.conj()), keep))
        out.append(BlochPoint(float(ti), x, y, z))
    return out


def bloch_trajectory(s, psi0, t_grid, keep=1):
    """Reduced-qubit Bloch vectors along the exact evolution."""
    tr = trajectory(s, psi0, t_grid)
    return bloch_points(tr.t, tr.normalized, keep)


def concurrence_trace(s, psi0, t_grid):
    return trajectory(s, psi0, t_grid).concurrence


def beta_phase_offset(s, t, psi0=None):
    """pi/2 - Arg(beta) of the exact state at time ``t``."""
    psi0 = PureState.basis("ff") if psi0 is None else psi0
    raw, _ = evolve_exact(s, psi0, t)
    return math.pi / 2 - float(np.angle(raw.beta))


def first_period_peak(s, psi0=None, points=4000, periods=1.0):
    """Time and value of the largest concurrence within the uncoupled period.

    Parameters
    ----------
    s : SystemParams
        Identical resonant qubits in the preserving phase.
    """
    psi0 = PureState.basis("ff") if psi0 is None else psi0
    q = s.qubit1
    e2 = 16.0 * q.omega**2 - q.gamma**2
    if e2 <= 0:
        raise ValueError("period undefined outside the preserving phase")
    t = np.linspace(0.0, periods * 4.0 * math.pi / math.sqrt(e2), points)
    c = trajectory(s, psi0, t).concurrence
    k = int(np.argmax(c))
    return float(t[k]), float(c[k])


def differential_phase_vs_J(gamma, omega, J_values, t=5.325, track_t_star=False):
    """pi/2 - Arg(beta) from exact evolution for each coupling.

    With ``track_t_star`` the evaluation time follows the per-coupling
    concurrence peak inside the first period instead of the fixed ``t``.
    """
    from .model import SystemParams

    out = []
    for J in J_values:
        s = SystemParams.identical(gamma, omega, J)
        ti = first_period_peak(s)[0] if track_t_star else t
        out.append(beta_phase_offset(s, ti))
    return np.array(out)


def peak(t, values, t_max: Optional[float] = None):
    """Largest value (and its time) with optional upper time limit."""
    t = np.asarray(t)
    values = np.asarray(values)
    mask = np.ones_like(t, dtype=bool) if t_max is None else t < t_max
    k = int(np.argmax(np.where(mask, values, -np.inf)))
    return float(t[k]), float(values[k])

