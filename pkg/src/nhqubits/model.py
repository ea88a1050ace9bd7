"""Hamiltonians of driven lossy qubits and their coupled pair.

Single-qubit basis is {|f>, |e>}; the two-qubit basis is ordered
{|ff>, |fe>, |ef>, |ee>}. Times are in microseconds, rates in 1/us and
frequencies in rad/us.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
PARITY = np.kron(SIGMA_X, SIGMA_X)


@dataclass(frozen=True)
class QubitParams:
    """Detuning ``delta``, decay rate ``gamma`` of |e> and drive ``omega``."""

    delta: float = 0.0
    gamma: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        for name in ("delta", "gamma", "omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")


@dataclass(frozen=True)
class SystemParams:
    qubit1: QubitParams
    qubit2: QubitParams
    coupling: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.coupling) or self.coupling < 0:
            raise ValueError("coupling must be finite and non-negative")

    @classmethod
    def identical(cls, gamma, omega, J, delta=0.0):
        q = QubitParams(delta=delta, gamma=gamma, omega=omega)
        return cls(q, q, J)

    @property
    def identical_resonant(self):
        return self.qubit1 == self.qubit2 and self.qubit1.delta == 0

    def with_omega(self, omega):
        """Copy with both drives set to ``omega``."""
        q1 = QubitParams(self.qubit1.delta, self.qubit1.gamma, omega)
        q2 = QubitParams(self.qubit2.delta, self.qubit2.gamma, omega)
        return SystemParams(q1, q2, self.coupling)

    def with_coupling(self, J):
        return SystemParams(self.qubit1, self.qubit2, J)

    CONFIG_KEYS = ("delta1", "gamma1", "omega1", "delta2", "gamma2", "omega2", "J")

    @classmethod
    def from_mapping(cls, m):
        """Build from a mapping with keys delta1, gamma1, omega1, delta2, gamma2, omega2, J.

        Missing keys default to zero; unknown keys raise ``KeyError``.
        """
        extra = set(m) - set(cls.CONFIG_KEYS)
        if extra:
            raise KeyError(f"unknown parameter keys: {sorted(extra)}")
        g = lambda k: float(m.get(k, 0.0))
        return cls(
            QubitParams(g("delta1"), g("gamma1"), g("omega1")),
            QubitParams(g("delta2"), g("gamma2"), g("omega2")),
            g("J"),
        )

    def to_mapping(self):
        q1, q2 = self.qubit1, self.qubit2
        vals = (q1.delta, q1.gamma, q1.omega, q2.delta, q2.gamma, q2.omega, self.coupling)
        return dict(zip(self.CONFIG_KEYS, map(float, vals)))


@dataclass(frozen=True)
class DerivedScales:
    """Characteristic scales of an identical pair.

    ``eta`` is complex: real in the symmetry-preserving phase and purely
    imaginary in the broken phase. ``chi2`` and ``period`` are ``None`` when
    they are undefined.
    """

    eta: complex
    omega_ep: float
    chi2: Optional[complex] = None
    period: Optional[float] = None
    broken: bool = field(default=False)


def eta(gamma, omega):
    """Splitting scale sqrt(16 omega^2 - gamma^2) as a complex number."""
    return complex(np.sqrt(complex(16.0 * omega**2 - gamma**2)))


def single_qubit_hamiltonian(p):
    """2x2 Hamiltonian [[0, omega], [omega, delta - i gamma / 2]]."""
    return np.array([[0.0, p.omega], [p.omega, p.delta - 0.5j * p.gamma]], dtype=complex)


def coupling_operator(J):
    """Exchange term J(|fe><ef| + |ef><fe|)."""
    V = np.zeros((4, 4), dtype=complex)
    V[1, 2] = V[2, 1] = J
    return V


def coupled_hamiltonian(s):
    """4x4 Hamiltonian of the coupled pair."""
    I = np.eye(2)
    H1 = single_qubit_hamiltonian(s.qubit1)
    H2 = single_qubit_hamiltonian(s.qubit2)
    return np.kron(H1, I) + np.kron(I, H2) + coupling_operator(s.coupling)


def derived_scales(s):
    """Scales of the pair computed from the first qubit's parameters."""
    q = s.qubit1
    e = eta(q.gamma, q.omega)
    broken = 16.0 * q.omega**2 < q.gamma**2
    chi2 = period = None
    if s.identical_resonant and e != 0:
        chi2 = s.coupling * (e**2 + 3.0 * q.gamma**2) / e**2
        if not broken:
            period = 4.0 * math.pi / e.real
    return DerivedScales(eta=e, omega_ep=q.gamma / 4.0, chi2=chi2, period=period, broken=broken)


def pt_symmetry_check(s, tol=1e-12):
    """Test passive PT symmetry of the coupled Hamiltonian.

    The uniform loss i(gamma1 + gamma2)/4 is added back and the result is
    compared with its image P conj(H) P under parity times complex
    conjugation.

    Returns
    -------
    (bool, float)
        Whether the residual norm is within ``tol`` and the residual itself.
    """
    H = coupled_hamiltonian(s) + 0.25j * (s.qubit1.gamma + s.qubit2.gamma) * np.eye(4)
    residual = float(np.linalg.norm(PARITY @ H.conj() @ PARITY - H))
    return residual <= tol, residual


def compensated_omega(gamma1, omega1, gamma2):
    """Drive for qubit 2 giving it the same oscillation period as qubit 1."""
    val = (16.0 * omega1**2 - gamma1**2 + gamma2**2) / 16.0
    if val < 0:
        raise ValueError("no real drive matches the requested period")
    return math.sqrt(val)
