"""Command-line entry point.

Subcommands ``spectrum``, ``evolve``, ``epscan``, ``optimize`` and
``lindblad`` write CSV or JSON. Every output starts with the fully resolved
configuration, so identical inputs give byte-identical files.

Exit codes: 0 on success, 2 for invalid configuration, 3 for numerical
failure.
"""
import argparse
import json
import math
import sys

import numpy as np

from . import dynamics, lindblad, optimizer, perturbation, spectra
from .entanglement import NotADensityMatrix
from .model import QubitParams, SystemParams, compensated_omega
from .numerics import NonConvergence

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "gamma": 6.0,
    "J": 1e-3,
    "delta1": 0.0,
    "delta2": 0.0,
    "t_max": 8.0,
    "t_points": 801,
    "dt": 1e-3,
    "record_every": 10,
    "gamma_f": 0.0,
    "seed_state": "ff",
    "method": "exact",
    "format": None,
    "compensate_period": False,
    "eps": spectra.DEFAULT_EPS,
    "threshold": spectra.DEFAULT_THRESHOLD,
    "gap": spectra.DEFAULT_GAP,
    "refine": False,
    "fit_J": "1e-6:1e-2:9",
    "omega_points": optimizer.DEFAULT_RESOLUTION[0],
    "grid_t_points": optimizer.DEFAULT_RESOLUTION[1],
    "target": optimizer.HERMITIAN_TARGET,
}


class ConfigError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


NUMERIC_ERRORS = (
    NumericalError,
    NonConvergence,
    lindblad.StepSizeTooLarge,
    spectra.AmbiguousCluster,
    NotADensityMatrix,
    np.linalg.LinAlgError,
    FloatingPointError,
)


# ---------------------------------------------------------------- parsing

def parse_range(text):
    """``start:end:steps`` as a linspace; a bare number is a single point."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([_real(parts[0])])
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must be start:end:steps")
        start, end, steps = _real(parts[0]), _real(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"cannot parse range {text!r}: {exc}") from None
    if steps < 2:
        raise ConfigError(f"range {text!r} needs at least two steps")
    if not start < end:
        raise ConfigError(f"range {text!r} must have start < end")
    return np.linspace(start, end, steps)


def parse_list(text):
    """Comma-separated numbers, or a ``start:end:steps`` range."""
    text = str(text).strip()
    if ":" in text:
        return parse_range(text)
    items = [p for p in text.split(",") if p.strip()]
    if not items:
        raise ConfigError("empty list")
    try:
        return np.array([_real(p) for p in items])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_log_range(text):
    """``start:end:steps`` spaced logarithmically."""
    lin = parse_range(text)
    if len(lin) < 2 or lin[0] <= 0:
        raise ConfigError(f"log range {text!r} needs positive bounds and at least two steps")
    return np.geomspace(lin[0], lin[-1], len(lin))


def _real(text):
    v = float(str(text).strip())
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not finite")
    return v


def _common(p):
    g = p.add_argument_group("system")
    for name in ("gamma", "gamma1", "gamma2", "delta1", "delta2", "detuning"):
        g.add_argument(f"--{name}", type=float)
    for name in ("omega", "omega1", "omega2"):
        g.add_argument(f"--{name}")
    g.add_argument("--J")
    g.add_argument("--compensate-period", action="store_const", const=True,
                   help="set omega2 so both qubits share the uncoupled period")
    o = p.add_argument_group("output")
    o.add_argument("--config", help="JSON file of defaults; flags take precedence")
    o.add_argument("--out", help="output path, standard output when omitted")
    o.add_argument("--format", choices=("csv", "json"))


def build_parser():
    ap = argparse.ArgumentParser(prog="nhqubits", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues and minimum overlap along omega or J")
    _common(p)

    p = sub.add_parser("evolve", help="amplitudes, phases, concurrence and Bloch vector in time")
    _common(p)
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-points", type=int)
    p.add_argument("--method", choices=("exact", "perturbative"))
    p.add_argument("--seed-state")

    p = sub.add_parser("epscan", help="exceptional-point order and eigenvalue scaling fit")
    _common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--gap", type=float)
    p.add_argument("--refine", action="store_const", const=True)
    p.add_argument("--fit-J", help="log-spaced J range start:end:steps for the scaling fit")
    p.add_argument("--no-fit", action="store_const", const=True)

    p = sub.add_parser("optimize", help="optimal drive and time, Hermitian baseline, enhancement")
    _common(p)
    p.add_argument("--omega-range", help="drive search interval start:end, default (gamma/4, gamma/2]")
    p.add_argument("--omega-points", type=int)
    p.add_argument("--grid-t-points", type=int)
    p.add_argument("--target", type=float)
    p.add_argument("--grid", help="write the (omega, t, C) map for the first J to this CSV")
    p.add_argument("--t-max", type=float)

    p = sub.add_parser("lindblad", help="master-equation evolution with |f> -> |e> jumps")
    _common(p)
    p.add_argument("--t-max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--record-every", type=int)
    p.add_argument("--gamma-f", type=float)
    p.add_argument("--gamma-f1", type=float)
    p.add_argument("--gamma-f2", type=float)
    p.add_argument("--seed-state")
    return ap


# summaries default to JSON, time series and sweeps to CSV
DEFAULT_FORMAT = {"epscan": "json", "optimize": "json"}


def _merge(args):
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = set(loaded) - set(cfg) - set(vars(args)) - {"config", "out", "command", "grid"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "out", "command"):
            cfg[k] = v
    if cfg["format"] is None:
        cfg["format"] = DEFAULT_FORMAT.get(args.command, "csv")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    return cfg


def _pick(cfg, specific, general):
    return cfg[specific] if cfg.get(specific) is not None else cfg.get(general)


def _positive(cfg, *keys):
    for k in keys:
        v = cfg[k]
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise ConfigError(f"{k} must be positive, got {v!r}")


DEFAULT_OMEGA = 1.6


def _system(cfg, omega=None, J=None, default_omega=DEFAULT_OMEGA):
    """Resolve per-qubit parameters; ``omega`` and ``J`` override scalar values."""
    g1 = float(_pick(cfg, "gamma1", "gamma"))
    g2 = float(_pick(cfg, "gamma2", "gamma"))

    def drive(key):
        v = _pick(cfg, key, "omega")
        return default_omega if v is None else _scalar(v, key)

    o1 = omega if omega is not None else drive("omega1")
    o2 = omega if omega is not None else drive("omega2")
    if cfg.get("compensate_period"):
        if cfg.get("omega2") is not None:
            raise ConfigError("--compensate-period and --omega2 are exclusive")
        o2 = compensated_omega(g1, o1, g2)
    d = cfg.get("detuning")
    d1 = float(d if d is not None else cfg["delta1"])
    d2 = float(d if d is not None else cfg["delta2"])
    J = J if J is not None else _scalar(cfg["J"], "J")
    return SystemParams(QubitParams(d1, g1, o1), QubitParams(d2, g2, o2), J)


def _scalar(v, name):
    vals = parse_list(v) if isinstance(v, str) else np.atleast_1d(np.asarray(v, dtype=float))
    if len(vals) != 1:
        raise ConfigError(f"{name} must be a single value here")
    return float(vals[0])


def _values(v):
    return parse_list(v) if isinstance(v, str) else np.atleast_1d(np.asarray(v, dtype=float))


def _state(cfg):
    try:
        return dynamics.PureState.parse(str(cfg["seed_state"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- output

def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def render_csv(config, columns, rows):
    lines = ["# config: " + json.dumps(_clean(config), separators=(",", ":")), ",".join(columns)]
    for r in rows:
        lines.append(",".join("%.17g" % v for v in r))
    return "\n".join(lines) + "\n"


def render_json(config, payload):
    return json.dumps(_clean({"config": config, **payload}), indent=2) + "\n"


def _table(cfg, resolved, columns, rows, extra=None):
    if cfg["format"] == "csv":
        return render_csv(resolved, columns, rows)
    data = [dict(zip(columns, r)) for r in rows]
    return render_json(resolved, {**(extra or {}), "rows": data})


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg):
    given = _pick(cfg, "omega1", "omega")
    omega = _values(DEFAULT_OMEGA if given is None else given)
    J = _values(cfg["J"])
    if len(omega) > 1 and len(J) > 1:
        raise ConfigError("sweep either omega or J, not both")
    if len(J) > 1:
        axis, values = "J", J
        base = _system(cfg, J=0.0)
    else:
        axis, values = "omega", omega
        base = _system(cfg, omega=float(omega[0]))
    if len(values) < 2:
        raise ConfigError("spectrum needs a range for omega or J")
    if np.any(values < 0):
        raise ConfigError(f"{axis} values must be non-negative")
    res = spectra.sweep_eigenvalues(base, axis, values)
    columns = [axis] + [f"re_l{k}" for k in range(1, 5)] + [f"im_l{k}" for k in range(1, 5)]
    columns += ["min_overlap", "max_overlap"]
    rows = [
        [x, *lam.real, *lam.imag, lo, hi]
        for x, lam, lo, hi in zip(res.axis, res.eigenvalues, res.min_overlap, res.max_overlap)
    ]
    params = base.to_mapping()
    for k in (("omega1", "omega2") if axis == "omega" else ("J",)):
        params[k] = None
    resolved = {"command": "spectrum", "axis": axis, **params,
                "range": [float(values[0]), float(values[-1]), len(values)]}
    return _table(cfg, resolved, columns, rows)


_AMP = ("alpha", "beta", "zeta", "delta")


def cmd_evolve(cfg):
    s = _system(cfg)
    _positive(cfg, "t_max", "t_points")
    t = dynamics.default_grid(float(cfg["t_max"]), int(cfg["t_points"]))
    psi0 = _state(cfg)
    if cfg["method"] == "perturbative":
        if not s.identical_resonant:
            raise ConfigError("the perturbative method needs identical resonant qubits")
        q = s.qubit1
        basis = perturbation.perturbed_eigensystem(q.gamma, q.omega, s.coupling)
        tr = perturbation.perturbative_trajectory(psi0, t, basis)
    elif cfg["method"] == "exact":
        tr = dynamics.trajectory(s, psi0, t)
    else:
        raise ConfigError(f"unknown method {cfg['method']!r}")
    v = tr.normalized
    if not np.all(np.isfinite(v)):
        raise NumericalError("state norm underflowed")
    recs = dynamics.phase_records(tr.t, v)
    bloch = dynamics.bloch_points(tr.t, v)
    norms = tr.norms
    conc = tr.concurrence
    columns = (
        ["t", "norm"]
        + [f"{p}_{a}" for a in _AMP for p in ("re", "im")]
        + [f"mod_{a}" for a in _AMP]
        + [f"phase_{a}" for a in _AMP]
        + ["dphi", "C", "bloch_x", "bloch_y", "bloch_z"]
    )
    rows = []
    for k, (r, b) in enumerate(zip(recs, bloch)):
        amp = [x for z in v[k] for x in (z.real, z.imag)]
        rows.append([r.t, norms[k], *amp, *r.moduli, *r.phases, r.dphi, conc[k], b.x, b.y, b.z])
    resolved = {"command": "evolve", **s.to_mapping(), "t_max": float(cfg["t_max"]),
                "t_points": int(cfg["t_points"]), "method": cfg["method"],
                "seed_state": str(cfg["seed_state"]), "amplitudes": "normalized"}
    return _table(cfg, resolved, columns, rows)


def cmd_epscan(cfg):
    # without an explicit drive the scan sits at the uncoupled EP, omega = gamma / 4
    s = _system(cfg, default_omega=float(_pick(cfg, "gamma1", "gamma")) / 4)
    q = s.qubit1
    if s.qubit1 != s.qubit2:
        raise ConfigError("epscan needs identical qubits")
    _positive(cfg, "eps", "gap")
    order = spectra.ep_order(s, q.omega, eps=float(cfg["eps"]), threshold=float(cfg["threshold"]),
                             gap=float(cfg["gap"]), refine=bool(cfg["refine"]))
    ov = [spectra.overlap_matrix(s.with_omega(x)) for x in (q.omega - cfg["eps"], q.omega + cfg["eps"]) if x >= 0]
    fits = []
    if not cfg.get("no_fit"):
        J = parse_log_range(cfg["fit_J"]) if isinstance(cfg["fit_J"], str) else _values(cfg["fit_J"])
        fits = spectra.scaling_fit(s, J)
    resolved = {"command": "epscan", **s.to_mapping(), "eps": float(cfg["eps"]),
                "threshold": float(cfg["threshold"]), "gap": float(cfg["gap"]),
                "refine": bool(cfg["refine"]), "fit_J": None if cfg.get("no_fit") else str(cfg["fit_J"])}
    fit_rows = [
        {"branch": f.branch, "part": f.part, "status": f.status, "slope": f.slope,
         "coefficient": f.coefficient, "offset": f.offset}
        for f in fits
    ]
    summary = {
        "order": order,
        "min_overlap": min(o.min_offdiagonal for o in ov),
        "eigenvalue_spread": max(float(np.abs(o.eigenvalues - o.eigenvalues.mean()).max()) for o in ov),
        "fits": fit_rows,
    }
    if cfg["format"] == "json":
        return render_json(resolved, summary)
    columns = ["branch", "part_im", "varying", "slope", "coefficient", "offset"]
    rows = [
        [f.branch, f.part == "im", f.status == "varying",
         np.nan if f.slope is None else f.slope,
         np.nan if f.coefficient is None else f.coefficient, f.offset]
        for f in fits
    ]
    resolved = {**resolved, "order": order, "min_overlap": summary["min_overlap"],
                "eigenvalue_spread": summary["eigenvalue_spread"]}
    return render_csv(resolved, columns, rows)


def cmd_optimize(cfg, grid_path=None):
    s = _system(cfg, omega=0.0, J=0.0)
    if s.qubit1 != s.qubit2 or s.qubit1.delta != 0:
        raise ConfigError("optimize needs identical resonant qubits")
    gamma = s.qubit1.gamma
    J = _values(cfg["J"])
    if len(J) == 0:
        raise ConfigError("J list must not be empty")
    if np.any(J <= 0):
        raise ConfigError("J values must be positive")
    _positive(cfg, "omega_points", "grid_t_points")
    res = (int(cfg["omega_points"]), int(cfg["grid_t_points"]))
    omega_range = None
    if cfg.get("omega_range") is not None:
        lo, hi = (_real(x) for x in str(cfg["omega_range"]).split(":"))
        if not lo < hi:
            raise ConfigError("omega range must have start < end")
        omega_range = (lo, hi)
    if omega_range is not None and omega_range[0] <= gamma / 4:
        raise ConfigError("omega range must lie above gamma / 4")
    points = []
    for j in J:
        om, tm, cm = optimizer.optimal_point(float(j), gamma, omega_range, res)
        th = optimizer.hermitian_baseline(float(j), "ff", om, target=float(cfg["target"]))
        points.append(optimizer.EnhancementPoint(float(j), om, tm, cm, th))
    slope = icpt = float("nan")
    if len(points) >= 2:
        f = np.array([p.factor for p in points])
        if np.all(np.isfinite(f)) and np.all(f > 0):
            slope, icpt = (float(x) for x in np.polyfit(np.log(J), np.log(f), 1))
    resolved = {"command": "optimize", "gamma": gamma, "J": [float(j) for j in J],
                "omega_range": omega_range, "resolution": list(res), "target": float(cfg["target"])}
    grid_text = None
    if grid_path:
        _positive(cfg, "t_max")
        lo, hi = omega_range or (gamma / 4 * (1 + 1e-4), gamma / 2)
        g = optimizer.concurrence_map(float(J[0]), gamma, (lo, hi), (0.0, float(cfg["t_max"])), res)
        rows = [[o, t, g.values[i, k]] for i, o in enumerate(g.omega_axis) for k, t in enumerate(g.t_axis)]
        grid_cfg = {**resolved, "J": float(J[0]), "omega_range": [lo, hi], "t_max": float(cfg["t_max"]),
                    "argmax": list(g.argmax)}
        grid_text = render_csv(grid_cfg, ["omega", "t", "C"], rows)
    columns = ["J", "omega_star", "t_star", "c_max", "t_hermitian", "factor"]
    rows = [[p.J, p.omega_star, p.t_star, p.c_max, p.t_hermitian, p.factor] for p in points]
    text = _table(cfg, resolved, columns, rows, {"fit": {"slope": slope, "intercept": icpt}})
    return text, grid_text


def cmd_lindblad(cfg):
    s = _system(cfg)
    gf1 = float(_pick(cfg, "gamma_f1", "gamma_f"))
    gf2 = float(_pick(cfg, "gamma_f2", "gamma_f"))
    _positive(cfg, "dt", "t_max", "record_every")
    p = lindblad.LindbladParams(s, gf1, gf2, float(cfg["dt"]), float(cfg["t_max"]))
    tr = lindblad.integrate_master(_state(cfg).normalize().projector(), p, int(cfg["record_every"]))
    pops = tr.populations
    columns = ["t", "trace", "C", "p_ff", "p_fe", "p_ef", "p_ee"]
    rows = [[t, tr.trace[k], tr.concurrence[k], *pops[k]] for k, t in enumerate(tr.t)]
    resolved = {"command": "lindblad", **s.to_mapping(), "gamma_f1": gf1, "gamma_f2": gf2,
                "dt": p.dt, "t_max": p.t_max, "record_every": int(cfg["record_every"]),
                "seed_state": str(cfg["seed_state"])}
    return _table(cfg, resolved, columns, rows)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "epscan": cmd_epscan,
    "lindblad": cmd_lindblad,
}


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def run(argv=None):
    """Parse ``argv``, run the command and return the exit code."""
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge(args)
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            if args.command == "optimize":
                text, grid = cmd_optimize(cfg, args.grid)
            else:
                text, grid = COMMANDS[args.command](cfg), None
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write(args.out, text)
    if grid is not None:
        _write(args.grid, grid)
    return 0


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        sys.stderr.close()
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
