"""Command-line front end.

Subcommands write CSV time series (``clock-paths``, ``trajectory``,
``orbits``) or JSON reports (``mc-vs-exact``, ``bounds``). Settings are
resolved in the order: built-in defaults, ``--preset``, ``--config`` JSON
file, explicit flags. Everything is validated before any computation.

Exit codes: 0 success, 1 an internal tolerance check failed, 2 invalid
configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, clock, master, montecarlo, qstate
from .clock import ClockModel
from .errors import QClockError

SEED_ENV = "QCLOCK_SEED"
FALLBACK_SEED = 20240917

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2

COMMANDS = ("clock-paths", "trajectory", "orbits", "mc-vs-exact", "bounds")

# Published parameter choices live here and nowhere else.
PRESETS: dict[str, dict] = {
    "fig1": {"model": "gamma", "kappa": [100.0, 10.0, 1.0, 0.01], "t_end": 1.0, "dt": 1e-3},
    # the fig2 kappas are a local choice; no values are published for them
    "fig2": {"model": "gamma", "kappa": [100.0, 10.0, 1.0], "omega": 0.8, "t_end": 10.0, "dt": 0.01,
             "initial": "plus-x"},
    "fig3a": {"model": "gamma", "lambda_": [0.005], "omega": 0.8, "order": [0, 1, 2, 3], "t_end": 20.0,
              "initial": "plus-x"},
    "fig3b": {"model": "gamma", "lambda_": [0.5], "omega": 0.8, "order": [1, 2, 3], "t_end": 20.0,
              "initial": "plus-x"},
    "bounds-paper": {"kappa": [1e19], "delta": bounds.PLANCK_TIME, "tau": 1e-21, "time_years": 30e9,
                     "ramsey_time": 1.0, "transition_frequency": bounds.CESIUM_HYPERFINE_HZ},
}

DEFAULTS: dict[str, dict] = {
    "clock-paths": dict(PRESETS["fig1"], units="natural", format="csv"),
    "trajectory": dict(PRESETS["fig2"], kappa=[10.0], dim=2, units="natural", format="csv"),
    "orbits": dict(PRESETS["fig3a"], dim=2, units="natural", format="csv"),
    "mc-vs-exact": {"model": "gamma", "kappa": [10.0], "omega": 0.8, "dim": 2, "initial": "plus-x",
                    "t_end": 5.0, "n_grid": 50, "n_traj": 10_000, "workers": 1, "units": "natural",
                    "format": "json"},
    "bounds": dict(PRESETS["bounds-paper"], units="si", format="json"),
}


class ConfigError(QClockError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = "gamma"
    kappa: list = field(default_factory=list)
    omega: float = 0.8
    dim: int = 2
    initial: str = "plus-x"
    order: list = field(default_factory=lambda: [0])
    t_end: float = 1.0
    dt: float | None = None
    n_grid: int | None = None
    n_traj: int = 10_000
    workers: int = 1
    seed: int = FALLBACK_SEED
    seed_source: str = "default"
    preset: str | None = None
    units: str = "natural"
    out: str | None = None
    format: str = "csv"
    delta: float = bounds.PLANCK_TIME
    tau: float = 1e-21
    time_years: float = 30e9
    ramsey_time: float = 1.0
    transition_frequency: float = bounds.CESIUM_HYPERFINE_HZ
    hamiltonian: list | None = None
    rho0: list | None = None

    def models(self) -> list[ClockModel]:
        return [ClockModel(self.model, k) for k in self.kappa]

    def echo(self) -> dict:
        d = asdict(self)
        for key in ("hamiltonian", "rho0"):
            if d[key] is None:
                d.pop(key)
        return d


# ---------------------------------------------------------------- parsing


def _number(name, value, kind=float):
    if isinstance(value, bool):
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': invalid number {value!r}") from None
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"field '{name}': must be finite, got {value!r}")
    if kind is int and isinstance(value, float) and value != out:
        raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
    return out


def _as_list(name, value, kind=float):
    values = value if isinstance(value, (list, tuple)) else [value]
    if not values:
        raise ConfigError(f"field '{name}': must not be empty")
    return [_number(name, v, kind) for v in values]


def _matrix(name, value):
    try:
        rows = [[complex(*e) if isinstance(e, (list, tuple)) else complex(e) for e in row] for row in value]
        arr = np.array(rows, dtype=complex)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}': entries must be numbers or [re, im] pairs") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"field '{name}': must be a square matrix, got shape {arr.shape}")
    return arr.tolist()


_CHOICES = {
    "model": ("gamma", "ig"),
    "initial": ("plus-x", "mixed", "ground"),
    "units": ("si", "natural"),
    "format": ("csv", "json"),
    "preset": tuple(PRESETS),
}
_POSITIVE = {"omega": False, "t_end": False, "dt": True, "delta": True, "tau": True, "time_years": True,
             "ramsey_time": True, "transition_frequency": True}


def _coerce(key: str, value):
    if key in ("kappa", "lambda_"):
        vals = _as_list("lambda" if key == "lambda_" else key, value)
        if any(v <= 0.0 for v in vals):
            raise ConfigError(f"field '{key.rstrip('_')}': values must be > 0")
        return vals
    if key == "order":
        vals = _as_list(key, value, int)
        if any(v < 0 for v in vals):
            raise ConfigError("field 'order': truncation orders must be >= 0")
        return vals
    if key in ("dim", "n_grid", "n_traj", "seed", "workers"):
        v = _number(key, value, int)
        minimum = {"dim": 1, "n_grid": 1, "n_traj": 2, "seed": 0, "workers": 1}[key]
        if v < minimum:
            raise ConfigError(f"field '{key}': must be >= {minimum}, got {v}")
        return v
    if key in _POSITIVE:
        v = _number(key, value)
        if _POSITIVE[key] and v <= 0.0:
            raise ConfigError(f"field '{key}': must be > 0, got {v}")
        if not _POSITIVE[key] and key == "t_end" and v < 0.0:
            raise ConfigError(f"field 't_end': must be >= 0, got {v}")
        return v
    if key in _CHOICES:
        if value not in _CHOICES[key]:
            raise ConfigError(f"field '{key}': expected one of {_CHOICES[key]}, got {value!r}")
        return value
    if key in ("hamiltonian", "rho0"):
        return _matrix(key, value)
    if key == "out":
        return str(value)
    raise ConfigError(f"unknown field '{key}'")


def _load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lambda_"
        out[key] = value
    return out


def resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Merge defaults, preset, config file and flags into a validated RunConfig."""
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config", "func")}
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    preset = flags.get("preset", file_values.get("preset"))

    merged: dict = dict(DEFAULTS[command])
    if preset is not None:
        merged.update(PRESETS[_coerce("preset", preset)])
        merged["preset"] = preset
    # kappa and lambda are alternatives; a later layer replaces both
    for layer in (file_values, flags):
        if "kappa" in layer or "lambda_" in layer:
            merged.pop("kappa", None)
            merged.pop("lambda_", None)
        merged.update(layer)

    values = {k: _coerce(k, v) for k, v in merged.items()}
    if "kappa" in values and "lambda_" in values:
        raise ConfigError("give either kappa or lambda, not both")
    if "lambda_" in values:
        values["kappa"] = [1.0 / lam for lam in values.pop("lambda_")]

    if "seed" in values:
        values["seed_source"] = "flag" if "seed" in flags else "config"
    elif os.environ.get(SEED_ENV):
        values["seed"] = _coerce("seed", os.environ[SEED_ENV])
        values["seed_source"] = f"env:{SEED_ENV}"
    cfg = RunConfig(command=command, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.command in ("trajectory", "orbits") and cfg.dim != 2:
        raise ConfigError(f"field 'dim': {cfg.command} reports Bloch coordinates and needs dim = 2")
    for key in ("hamiltonian", "rho0"):
        m = getattr(cfg, key)
        if m is not None and len(m) != cfg.dim:
            raise ConfigError(f"field '{key}': matrix is {len(m)}x{len(m)} but dim = {cfg.dim}")
    if cfg.command in ("trajectory", "orbits", "mc-vs-exact"):
        _system(cfg)  # Hermiticity and state validity
    if cfg.command in ("orbits", "mc-vs-exact", "bounds") and len(cfg.kappa) != 1:
        raise ConfigError(f"field 'kappa': {cfg.command} takes a single value, got {len(cfg.kappa)}")
    if cfg.command == "orbits" and any(o > 64 for o in cfg.order):
        raise ConfigError("field 'order': orders above 64 are not supported")


# ---------------------------------------------------------------- system setup


def _system(cfg: RunConfig):
    try:
        if cfg.hamiltonian is not None:
            h = qstate.spectral_decompose(np.array(cfg.hamiltonian, dtype=complex))
        else:
            # omega * diag(d-1, d-3, ..., 1-d); omega * sigma_z for a qubit
            levels = cfg.dim - 1 - 2 * np.arange(cfg.dim)
            h = qstate.spectral_decompose(cfg.omega * np.diag(levels).astype(complex))
        if cfg.rho0 is not None:
            rho0 = qstate.DensityMatrix(np.array(cfg.rho0, dtype=complex))
        elif cfg.initial == "plus-x":
            rho0 = qstate.DensityMatrix.from_pure(np.ones(cfg.dim))
        elif cfg.initial == "mixed":
            rho0 = qstate.DensityMatrix.maximally_mixed(cfg.dim)
        else:
            rho0 = qstate.DensityMatrix.from_pure(h.eigenvectors[:, 0])
    except QClockError as exc:
        raise ConfigError(f"invalid system: {exc}") from None
    return h, rho0


def _grid(cfg: RunConfig) -> np.ndarray:
    if cfg.t_end == 0.0:
        return np.zeros(1)
    if cfg.n_grid is not None:
        return np.linspace(0.0, cfg.t_end, cfg.n_grid) if cfg.n_grid > 1 else np.zeros(1)
    step = cfg.dt if cfg.dt is not None else cfg.t_end / 1000.0
    n = int(round(cfg.t_end / step))
    return np.linspace(0.0, cfg.t_end, max(n, 1) + 1)


def _fmt(x: float) -> str:
    return f"{float(x):.16e}"


def _kappa_label(k: float) -> str:
    return f"{k:g}"


# ---------------------------------------------------------------- output


def _table_text(header: list[str], rows, fmt: str) -> str:
    if fmt == "json":
        cols = {h: [] for h in header}
        for row in rows:
            for h, v in zip(header, row):
                cols[h].append(v if isinstance(v, str) else float(v))
        return json.dumps(cols, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _report_text(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in report.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        writer.writerow([key, value])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _suffixed(out: str | None, suffix: str) -> str | None:
    if out is None:
        return None
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{suffix}{p.suffix}"))


# ---------------------------------------------------------------- commands


def cmd_clock_paths(cfg: RunConfig) -> int:
    grid = _grid(cfg)
    header = ["t"]
    columns = [grid]
    for j, model in enumerate(cfg.models()):
        rng = np.random.default_rng(clock.child_seed(cfg.seed, j))
        header.append(f"{cfg.model}_kappa_{_kappa_label(model.kappa)}")
        columns.append(clock.sample_path(model, grid, rng).values)
    _emit(_table_text(header, zip(*columns), cfg.format), cfg.out)
    return EXIT_OK


def cmd_trajectory(cfg: RunConfig) -> int:
    h, rho0 = _system(cfg)
    grid = _grid(cfg)
    status = EXIT_OK
    models = cfg.models()
    for j, model in enumerate(models):
        rec = montecarlo.evolve_trajectory(rho0, h, model, grid, clock.child_seed(cfg.seed, j))
        x, y, z = qstate.bloch_arrays(rec.states)
        x, y, z = np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(z)
        # unitary motion keeps the Bloch radius and latitude fixed
        r0 = math.sqrt(x[0] ** 2 + y[0] ** 2 + z[0] ** 2)
        if np.max(np.abs(np.sqrt(x**2 + y**2 + z**2) - r0)) > 1e-9 or np.max(np.abs(z - z[0])) > 1e-10:
            print(f"trajectory check failed for kappa={model.kappa:g}", file=sys.stderr)
            status = EXIT_CHECK_FAILED
        out = cfg.out if len(models) == 1 else _suffixed(cfg.out, f"kappa_{_kappa_label(model.kappa)}")
        rows = zip(grid, rec.clock.values, x, y, z)
        _emit(_table_text(["t", "gamma", "x", "y", "z"], rows, cfg.format), out)
    return status


def orbit_table(cfg: RunConfig):
    """Rows (t, order, x, y, z, min_eigenvalue, trace_error) for every order plus 'exact'."""
    h, rho0 = _system(cfg)
    model = cfg.models()[0]
    orders = list(dict.fromkeys(cfg.order))
    if cfg.dt is not None:
        dt = cfg.dt
    else:
        # largest step 1/k below the default, so whole time units are grid points
        dt = 1.0 / math.ceil(1.0 / min(master.default_step(h, model, m) for m in orders))
    rows = []
    times = None
    for m in orders:
        sol = master.integrate(rho0, h, model, m, cfg.t_end, dt)
        times = sol.times
        x, y, z = qstate.bloch_arrays(sol.states)
        for i, t in enumerate(sol.times):
            rows.append((t, str(m), x[i], y[i], z[i], sol.min_eigenvalues[i], sol.trace_errors[i]))
    if times is None:
        times = np.array([0.0])
    exact = master.exact_trajectory(rho0, h, model, times)
    x, y, z = qstate.bloch_arrays(exact)
    min_eigs = np.linalg.eigvalsh(exact)[:, 0]
    trace_err = np.abs(np.trace(exact, axis1=1, axis2=2).real - 1.0)
    for i, t in enumerate(times):
        rows.append((t, "exact", x[i], y[i], z[i], min_eigs[i], trace_err[i]))
    return rows


def cmd_orbits(cfg: RunConfig) -> int:
    rows = orbit_table(cfg)
    header = ["t", "order", "x", "y", "z", "min_eigenvalue", "trace_error"]
    _emit(_table_text(header, rows, cfg.format), cfg.out)
    if max(r[6] for r in rows) > 1e-10:
        print("orbit trace error exceeds 1e-10", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def mc_vs_exact_report(cfg: RunConfig) -> dict:
    h, rho0 = _system(cfg)
    model = cfg.models()[0]
    grid = _grid(cfg)
    est = montecarlo.ensemble_average(rho0, h, model, grid, cfg.n_traj, cfg.seed, workers=cfg.workers)
    exact = master.exact_trajectory(rho0, h, model, grid)
    ok = est.within(exact, 4.0)
    dev = np.abs(est.mean - exact)
    se = np.hypot(est.stderr_real, est.stderr_imag)
    points = [
        {
            "t": float(t),
            "max_abs_error": float(np.max(dev[i])),
            "envelope_4sigma": float(4.0 * np.max(se[i])),
            "pass": bool(ok[i]),
        }
        for i, t in enumerate(grid)
    ]
    return {
        "command": "mc-vs-exact",
        "inputs": cfg.echo(),
        "seed": cfg.seed,
        "seed_source": cfg.seed_source,
        "n_traj": cfg.n_traj,
        "points": points,
        "status": "PASS" if bool(np.all(ok)) else "FAIL",
    }


def cmd_mc_vs_exact(cfg: RunConfig) -> int:
    report = mc_vs_exact_report(cfg)
    _emit(_report_text(report, cfg.format), cfg.out)
    return EXIT_OK if report["status"] == "PASS" else EXIT_CHECK_FAILED


def bounds_report(cfg: RunConfig) -> dict:
    kappa = cfg.kappa[0]
    spec = bounds.AtomicClockSpec(cfg.transition_frequency, cfg.ramsey_time, "atomic clock")
    ticks = bounds.planck_tick_report(kappa, cfg.delta, cfg.tau)
    est = bounds.estimation_error_bound(kappa, cfg.time_years * bounds.JULIAN_YEAR)
    return {
        "command": "bounds",
        "inputs": cfg.echo(),
        "seed": cfg.seed,
        "seed_source": cfg.seed_source,
        "kappa_min": {
            "ordinary": bounds.kappa_lower_bound(spec, "ordinary"),
            "angular": bounds.kappa_lower_bound(spec, "angular"),
        },
        "energy_gap_ev": spec.energy_gap_ev,
        "r_delta": ticks.rate,
        "p_at_least_one": ticks.p_at_least_one,
        "fisher_information": est.fisher_information,
        "inverse_information": est.inverse_information,
        "root_inverse_information": est.root_inverse_information,
    }


def cmd_bounds(cfg: RunConfig) -> int:
    _emit(_report_text(bounds_report(cfg), cfg.format), cfg.out)
    return EXIT_OK


_HANDLERS = {
    "clock-paths": cmd_clock_paths,
    "trajectory": cmd_trajectory,
    "orbits": cmd_orbits,
    "mc-vs-exact": cmd_mc_vs_exact,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings (flags override it)")
    common.add_argument("--model", choices=_CHOICES["model"])
    rate = common.add_mutually_exclusive_group()
    rate.add_argument("--kappa", type=float, nargs="+", help="clock rate(s) kappa")
    rate.add_argument("--lambda", dest="lambda_", type=float, nargs="+", help="1/kappa")
    common.add_argument("--omega", type=float, help="H = omega * sigma_z (generalized for dim > 2)")
    common.add_argument("--dim", type=int)
    common.add_argument("--initial", choices=_CHOICES["initial"])
    common.add_argument("--order", type=int, nargs="+", help="truncation order(s) M")
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--n-grid", dest="n_grid", type=int)
    common.add_argument("--n-traj", dest="n_traj", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or {FALLBACK_SEED})")
    common.add_argument("--preset", choices=_CHOICES["preset"])
    common.add_argument("--units", choices=_CHOICES["units"])
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=_CHOICES["format"])
    common.add_argument("--delta", type=float, help="tick-size threshold in s")
    common.add_argument("--tau", type=float, help="observation window in s")
    common.add_argument("--time-years", dest="time_years", type=float)
    common.add_argument("--ramsey-time", dest="ramsey_time", type=float)
    common.add_argument("--transition-frequency", dest="transition_frequency", type=float, help="Hz")

    parser = argparse.ArgumentParser(prog="qclock", description="Quantum dynamics under a random clock.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "clock-paths": "sample gamma/IG clock paths (CSV)",
        "trajectory": "random-clock qubit trajectory in Bloch coordinates (CSV)",
        "orbits": "truncated master-equation orbits plus the exact solution (CSV)",
        "mc-vs-exact": "Monte Carlo ensemble vs exact averaged state (JSON)",
        "bounds": "atomic-clock, Planck-tick and Fisher bounds (JSON)",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except QClockError as exc:
        print(f"qclock {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _HANDLERS[args.command](cfg)
    except OSError as exc:
        print(f"qclock {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QClockError as exc:
        print(f"qclock {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
