"""Master equation with non-Hermitian drift and |f> -> |e> jumps.

    d rho / dt = -i (H rho - rho H^dag)
                 + sum_i g_i (L_i rho L_i^dag - {L_i^dag L_i, rho} / 2)

with L_i = |e><f| acting on qubit i. The drift alone does not preserve the
trace, so the stored state is left unnormalized and concurrence is taken
of the trace-normalized state.
"""
from dataclasses import dataclass

import numpy as np

from .entanglement import concurrence_mixed
from .model import coupled_hamiltonian

_LOWER = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><f|
JUMPS = (np.kron(_LOWER, np.eye(2)), np.kron(np.eye(2), _LOWER))


# Near the exceptional point the normalized state is sensitive to rounding
# injected early in the run, so the stepping is carried in extended precision.
WORK_DTYPE = np.clongdouble


class StepSizeTooLarge(ArithmeticError):
    """Raised when halving the step changes the concurrence beyond tolerance."""


@dataclass(frozen=True)
class LindbladParams:
    system: object
    gamma_f1: float = 0.0
    gamma_f2: float = 0.0
    dt: float = 1e-3
    t_max: float = 8.0

    def __post_init__(self):
        if self.gamma_f1 < 0 or self.gamma_f2 < 0:
            raise ValueError("gamma_f must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")


@dataclass(frozen=True)
class LindbladTrace:
    t: np.ndarray
    rho: np.ndarray
    trace: np.ndarray
    concurrence: np.ndarray

    @property
    def populations(self):
        d = np.einsum("kii->ki", self.rho).real
        return d / d.sum(axis=1, keepdims=True)


def master_rhs(rho, p, H=None):
    """Time derivative of ``rho``."""
    H = coupled_hamiltonian(p.system) if H is None else H
    out = -1j * (H @ rho - rho @ H.conj().T)
    for g, L in zip((p.gamma_f1, p.gamma_f2), JUMPS):
        if g:
            LdL = L.conj().T @ L
            out = out + g * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
    return out


def _rk4_propagator(p, dt, dtype=WORK_DTYPE):
    # the equation is linear, so one RK4 step is a fixed polynomial in the generator
    H = coupled_hamiltonian(p.system)
    basis = np.eye(16, dtype=complex).reshape(16, 4, 4)
    G = np.stack([master_rhs(E, p, H).ravel() for E in basis], axis=1).astype(dtype)
    hG = G * np.array(dt, dtype=dtype)
    step = np.eye(16, dtype=dtype)
    term = np.eye(16, dtype=dtype)
    for k in range(1, 5):
        term = term @ hG / k
        step = step + term
    return step


def _run(rho0, p, dt, n_steps, record_every):
    P = _rk4_propagator(p, dt)
    x = np.asarray(rho0, dtype=complex).ravel().astype(WORK_DTYPE)
    n_rec = n_steps // record_every + 1
    out = np.empty((n_rec, 4, 4), dtype=complex)
    out[0] = x.reshape(4, 4)
    for k in range(1, n_steps + 1):
        r = (P @ x).reshape(4, 4)
        r = 0.5 * (r + r.conj().T)
        x = r.ravel()
        if k % record_every == 0:
            out[k // record_every] = r
    return out


def integrate_master(rho0, p, record_every=10, check_step=True, tol=1e-6):
    """Fixed-step fourth-order Runge-Kutta integration of the master equation.

    Parameters
    ----------
    rho0 : array_like, shape (4, 4)
    p : LindbladParams
    record_every : int
        Store every ``record_every``-th step.
    check_step : bool
        Repeat the run at half the step and compare the recorded concurrence.
    tol : float
        Largest accepted concurrence change under step halving.

    Raises
    ------
    StepSizeTooLarge
        If the step-doubling comparison exceeds ``tol``.
    """
    n_steps = int(round(p.t_max / p.dt))
    rho = _run(rho0, p, p.dt, n_steps, record_every)
    t = np.arange(len(rho)) * record_every * p.dt
    conc = np.array([concurrence_mixed(r) for r in rho])
    if check_step:
        fine = _run(rho0, p, p.dt / 2, 2 * n_steps, 2 * record_every)
        c2 = np.array([concurrence_mixed(r) for r in fine])
        err = float(np.max(np.abs(c2 - conc)))
        if err > tol:
            raise StepSizeTooLarge(f"step halving changes concurrence by {err:.2e}")
    trace = np.einsum("kii->k", rho).real
    return LindbladTrace(t, rho, trace, conc)
