"""Searches for fast entanglement: concurrence maps, optimal drive and timing.

All searches start from |ff> and use exact evolution of identical qubits.
"""
import math
from dataclasses import dataclass
import numpy as np
from scipy.optimize import brentq

from .dynamics import PureState, trajectory
from .model import SystemParams, coupled_hamiltonian

DEFAULT_RESOLUTION = (151, 400)
HERMITIAN_TARGET = 0.999


@dataclass(frozen=True)
class ConcurrenceGrid:
    """Concurrence on an (omega, t) grid.

    ``times[i, j]`` is the physical time of cell (i, j). It equals
    ``t_axis[j]`` for an absolute time axis and ``t_axis[j] * period_i``
    when the time axis is measured in uncoupled periods.
    """

    omega_axis: np.ndarray
    t_axis: np.ndarray
    times: np.ndarray
    values: np.ndarray
    argmax: tuple


@dataclass(frozen=True)
class EnhancementPoint:
    J: float
    omega_star: float
    t_star: float
    c_max: float
    t_hermitian: float

    @property
    def factor(self):
        return self.t_hermitian / self.t_star


@dataclass(frozen=True)
class EnhancementResult:
    points: list
    slope: float
    intercept: float

    @property
    def factors(self):
        return np.array([p.factor for p in self.points])


def _period(gamma, omega):
    e2 = 16.0 * omega**2 - gamma**2
    if e2 <= 0:
        raise ValueError("omega must exceed gamma / 4 for a periodic time axis")
    return 4.0 * math.pi / math.sqrt(e2)


def _concurrence_at(J, gamma, omega, t):
    s = SystemParams.identical(gamma, omega, J)
    return float(trajectory(s, PureState.basis("ff"), [t]).concurrence[0])


def _vertex(ym, y0, yp):
    den = ym - 2 * y0 + yp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / den, -0.5, 0.5))


def concurrence_map(J, gamma, omega_range, t_range, resolution=DEFAULT_RESOLUTION,
                    t_in_periods=False, refine=True):
    """Concurrence of the |ff> evolution over drive amplitude and time.

    Parameters
    ----------
    J, gamma : float
    omega_range, t_range : (float, float)
        Inclusive bounds. With ``t_in_periods`` the time bounds are in units
        of the uncoupled period 4 pi / eta of each drive amplitude.
    resolution : (int, int)
        Number of omega and t points.
    refine : bool
        Move the argmax by quadratic interpolation over neighbouring cells
        and keep the refined point only if its exact concurrence is higher.

    Returns
    -------
    ConcurrenceGrid
        ``argmax`` is (omega*, t*, C_max). Ties go to the smaller t, then
        the smaller omega.
    """
    n_o, n_t = resolution
    omegas = np.linspace(*omega_range, n_o)
    t_axis = np.linspace(*t_range, n_t)
    scale = np.array([_period(gamma, o) for o in omegas]) if t_in_periods else np.ones(n_o)
    times = scale[:, None] * t_axis[None, :]
    psi0 = PureState.basis("ff")
    values = np.empty((n_o, n_t))
    for i, o in enumerate(omegas):
        values[i] = trajectory(SystemParams.identical(gamma, o, J), psi0, times[i]).concurrence
    values = np.clip(values, 0.0, 1.0)

    best = values.max()
    cand = np.argwhere(values == best)
    i, j = cand[np.lexsort((cand[:, 0], cand[:, 1]))][0]
    om, tm, cm = float(omegas[i]), float(times[i, j]), float(best)
    if refine and 0 < i < n_o - 1 and 0 < j < n_t - 1:
        di = _vertex(values[i - 1, j], values[i, j], values[i + 1, j])
        dj = _vertex(values[i, j - 1], values[i, j], values[i, j + 1])
        o2 = omegas[i] + di * (omegas[1] - omegas[0])
        t2 = (t_axis[j] + dj * (t_axis[1] - t_axis[0])) * (_period(gamma, o2) if t_in_periods else 1.0)
        c2 = _concurrence_at(J, gamma, o2, t2)
        if c2 > cm:
            om, tm, cm = float(o2), float(t2), c2
    return ConcurrenceGrid(omegas, t_axis, times, values, (om, tm, cm))


def optimal_point(J, gamma, omega_range=None, resolution=DEFAULT_RESOLUTION, zoom=True):
    """Best drive and first-period time for a single coupling.

    The time axis covers one uncoupled period for every drive amplitude, so
    T* is the first time maximal entanglement is reached. A second map
    zoomed to two coarse cells around the coarse optimum sharpens the
    result.
    """
    lo, hi = omega_range or (gamma / 4 * (1 + 1e-4), gamma / 2)
    g = concurrence_map(J, gamma, (lo, hi), (0.0, 1.0), resolution, t_in_periods=True)
    if zoom:
        step = g.omega_axis[1] - g.omega_axis[0]
        om = g.argmax[0]
        fine = concurrence_map(J, gamma, (max(lo, om - 2 * step), min(hi, om + 2 * step)),
                               (0.0, 1.0), resolution, t_in_periods=True)
        if fine.argmax[2] >= g.argmax[2]:
            g = fine
    return g.argmax


def hermitian_baseline(J, psi0="ff", omega=0.0, target=HERMITIAN_TARGET, t_max=None, samples_per_unit=None):
    """First time the lossless pair reaches concurrence ``target``.

    Parameters
    ----------
    J : float
        Coupling, must be positive.
    psi0 : str or PureState
    omega : float
        Drive amplitude of both qubits, decay set to zero.
    t_max : float, optional
        Search horizon, default 4 pi / J.

    Returns
    -------
    float
        Crossing time, refined by root finding between grid samples, or
        ``nan`` when the target is not reached before ``t_max``.
    """
    if J <= 0:
        raise ValueError("J must be positive")
    psi0 = PureState.parse(psi0) if isinstance(psi0, str) else psi0
    s = SystemParams.identical(0.0, omega, J)
    H = coupled_hamiltonian(s)
    w, V = np.linalg.eigh(H)
    c = V.conj().T @ psi0.amplitudes
    c = c / np.linalg.norm(c)

    def conc(t):
        t = np.atleast_1d(t)
        a, b, z, d = ((np.exp(-1j * np.outer(t, w)) * c) @ V.T).T
        return 2.0 * np.abs(a * d - b * z)

    t_max = 4.0 * math.pi / J if t_max is None else t_max
    spread = max(float(np.ptp(w)), J)
    dt = 0.2 / spread if samples_per_unit is None else 1.0 / samples_per_unit
    chunk = 200_000
    if conc(0.0)[0] >= target:
        return 0.0
    start = 0.0
    while start < t_max:
        t = start + dt * np.arange(1, chunk + 1)
        t = t[t <= t_max]
        if len(t) == 0:
            break
        hit = np.flatnonzero(conc(t) >= target)
        if len(hit):
            k = hit[0]
            a = t[k - 1] if k else start
            return float(brentq(lambda x: conc(x)[0] - target, a, t[k], xtol=1e-12))
        start = float(t[-1])
    return float("nan")


def optimal_vs_J(gamma, J_values, omega_range=None, resolution=DEFAULT_RESOLUTION):
    """Optimal (omega*, T*, C_max) for each coupling, with the Hermitian reference time."""
    if len(J_values) == 0:
        raise ValueError("J_values must not be empty")
    out = []
    for J in J_values:
        if J <= 0:
            raise ValueError("J values must be positive")
        om, tm, cm = optimal_point(J, gamma, omega_range, resolution)
        out.append(EnhancementPoint(float(J), om, tm, cm, hermitian_baseline(J, "ff", om)))
    return out


def enhancement_factor(gamma, J_values, omega_range=None, resolution=DEFAULT_RESOLUTION):
    """Enhancement factors with a log-log fit of factor against J.

    The fit is a diagnostic only; no particular exponent is implied.
    """
    pts = optimal_vs_J(gamma, J_values, omega_range, resolution)
    J = np.array([p.J for p in pts])
    f = np.array([p.factor for p in pts])
    if len(pts) >= 2:
        slope, icpt = np.polyfit(np.log(J), np.log(f), 1)
    else:
        slope = icpt = float("nan")
    return EnhancementResult(pts, float(slope), float(icpt))
