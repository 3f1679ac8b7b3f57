"""Command-line front end: JSON run configs, task execution and figure presets."""
from __future__ import annotations

import argparse
import copy
import dataclasses
import enum
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (FitError, FitMode, NoWindowError, auto_window, classify_longtime,
                       fit_lyapunov, scrambling_time)
from .correlators import (CorrelatorSeries, Ensemble, alpha_t, classify_light,
                          otoc_decomposition, otoc_g2_bridge, otoc_hermitian, relation_suite)
from .dynamics import GeneratorContext, IntegrationError, propagate
from .hilbert import HilbertGeometry, SpinMode, boson_ops, number_op, quadrature_ops
from .models import BathSpec, ModelSpec, Variant
from .thermo import (TruncationError, converge_truncation, floquet_ground_trace, ground_scan,
                     phase_boundary, phase_diagram, thermal_state)

log = logging.getLogger("dicke_chaos")

OUT_ENV = "DICKE_CHAOS_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class Task(str, enum.Enum):
    GROUND_SCAN = "ground-scan"
    PHASE_DIAGRAM = "phase-diagram"
    OTOC = "otoc"
    OTOC_SUITE = "otoc-suite"
    ALPHA = "alpha"
    SKEW_RELATIONS = "skew-relations"
    G2 = "g2"
    LYAPUNOV = "lyapunov"
    LONG_TIME = "long-time"


class ConfigError(ValueError):
    pass


DYNAMIC_TASKS = {Task.OTOC, Task.OTOC_SUITE, Task.ALPHA, Task.SKEW_RELATIONS, Task.G2,
                 Task.LYAPUNOV, Task.LONG_TIME}


@dataclass
class RunConfig:
    """One task with all of its inputs.

    ``geometry`` holds n_atoms, spin_mode and either an integer fock_dim or
    "auto" (with truncation_tol and fock_cap).  ``grid`` is {"t_max", "n_points"}
    or {"times": [...]} for dynamic tasks and {"start", "stop", "num"} for scans.
    ``sweep`` is optional: {"parameter": "model.lam" | "bath.kappa" | ..., "values": [...]}.
    """

    task: Task
    model: dict
    bath: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    operators: str = "qp"
    options: dict = field(default_factory=dict)
    sweep: dict | None = None
    output: str | None = None

    def to_dict(self) -> dict:
        d = {"task": self.task.value, "model": self.model, "bath": self.bath,
             "geometry": self.geometry, "grid": self.grid, "operators": self.operators,
             "options": self.options}
        if self.sweep is not None:
            d["sweep"] = self.sweep
        if self.output is not None:
            d["output"] = self.output
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"task", "model", "bath", "geometry", "grid", "operators", "options", "sweep",
                 "output"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            task = Task(d["task"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad or missing task: {d.get('task')!r}") from exc
        cfg = cls(task, copy.deepcopy(d.get("model", {})), copy.deepcopy(d.get("bath", {})),
                  copy.deepcopy(d.get("geometry", {})), copy.deepcopy(d.get("grid", {})),
                  d.get("operators", "qp"), copy.deepcopy(d.get("options", {})),
                  copy.deepcopy(d.get("sweep")), d.get("output"))
        cfg.validate()
        return cfg

    def points(self) -> list["RunConfig"]:
        """One config per sweep value (or just self)."""
        if not self.sweep:
            return [self]
        out = []
        section, _, key = self.sweep["parameter"].partition(".")
        for v in self.sweep["values"]:
            c = copy.deepcopy(self)
            c.sweep = None
            getattr(c, section)[key] = v
            out.append(c)
        return out

    def validate(self):
        if self.operators not in ("qp", "aa"):
            raise ConfigError("operators must be 'qp' or 'aa'")
        if self.sweep is not None:
            param = self.sweep.get("parameter", "")
            section, _, key = param.partition(".")
            if section not in ("model", "bath", "geometry", "options") or not key:
                raise ConfigError(f"bad sweep parameter {param!r}")
            if not self.sweep.get("values"):
                raise ConfigError("sweep needs a non-empty 'values' list")
        try:
            for c in self.points():
                c.model_spec()
                c.bath_spec()
                c._check_geometry()
                c._check_grid()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def model_spec(self) -> ModelSpec:
        if self.task is Task.PHASE_DIAGRAM:
            return None
        return ModelSpec.from_dict(self.model)

    def bath_spec(self) -> BathSpec:
        return BathSpec.from_dict(self.bath)

    def _check_geometry(self):
        if self.task is Task.PHASE_DIAGRAM:
            return
        g = self.geometry
        if "n_atoms" not in g:
            raise ConfigError("geometry.n_atoms is required")
        fd = g.get("fock_dim", "auto")
        HilbertGeometry(int(g["n_atoms"]), 2 if fd == "auto" else fd,
                        SpinMode(g.get("spin_mode", "collective")))
        if fd == "auto" and g.get("truncation_tol", 1e-6) <= 0:
            raise ConfigError("truncation_tol must be positive")

    def _check_grid(self):
        g = self.grid
        if self.task in DYNAMIC_TASKS:
            times = self.times()
            if times.size < 2:
                raise ConfigError("time grid needs at least two points")
        elif self.task is Task.GROUND_SCAN:
            if g.get("num", 0) < 5:
                raise ConfigError("ground-scan grid needs num >= 5")

    def times(self) -> np.ndarray:
        g = self.grid
        if "times" in g:
            t = np.asarray(g["times"], float)
        else:
            t = np.linspace(0.0, float(g.get("t_max", 10.0)), int(g.get("n_points", 201)))
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ConfigError("time grid must be strictly increasing from t >= 0")
        return t


# -- computation ------------------------------------------------------------

def resolve_geometry(cfg: RunConfig, spec: ModelSpec, temperature=None):
    """Geometry with a concrete fock_dim plus truncation evidence."""
    g = cfg.geometry
    mode = SpinMode(g.get("spin_mode", "collective"))
    base = HilbertGeometry(int(g["n_atoms"]), 2, mode)
    fd = g.get("fock_dim", "auto")
    if fd != "auto":
        return base.with_fock_dim(int(fd)), {"fock_dim": int(fd), "mode": "fixed"}
    tol = float(g.get("truncation_tol", 1e-6))
    cap = int(g.get("fock_cap", 64))
    n, evidence = converge_truncation(spec, base, tol, cap=cap, temperature=temperature)
    return base.with_fock_dim(n), {"fock_dim": n, "mode": "auto", "tol": tol, "cap": cap,
                                   "evidence": evidence}


def _series_pack(series_dict):
    return {k: (np.asarray(t, float), np.asarray(v, complex)) for k, (t, v) in series_dict.items()}


def _ground_scan(cfg: RunConfig) -> dict:
    spec = cfg.model_spec()
    g = cfg.grid
    if g.get("axis", "coupling") == "time":
        times = np.linspace(float(g.get("start", 0.0)), float(g["stop"]), int(g["num"]))
        geom, trunc = resolve_geometry(cfg, spec)
        e = floquet_ground_trace(spec, geom, times)
        tol = float(cfg.options.get("normal_tol", 1e-6))
        table = np.column_stack([times, e, (np.abs(e + 1.0) <= tol).astype(float)])
        return {"tables": {"ground_trace": (["time", "scaled_E0", "normal_phase"], table)},
                "truncation": trunc, "report": {}}
    couplings = np.linspace(float(g.get("start", 0.0)), float(g["stop"]), int(g["num"]))
    geom, trunc = resolve_geometry(cfg, spec.with_coupling(float(couplings[-1])))
    res = ground_scan(spec, geom, couplings, jobs=int(cfg.options.get("jobs", 1)))
    table = np.column_stack([res.coupling, res.scaled_energy, res.first_derivative,
                             res.second_derivative])
    report = {"kink": res.kink(), "departure": res.departure()}
    return {"tables": {"ground_scan": (["coupling", "scaled_E0", "dE", "d2E"], table)},
            "truncation": trunc, "report": report}


def _phase_diagram(cfg: RunConfig) -> dict:
    m = cfg.model
    kw = {"omega_a": m.get("omega_a", 1.0), "omega_c": m.get("omega_c", 1.0),
          "kappa": cfg.bath.get("kappa", 1.0), "gamma": cfg.bath.get("gamma", 0.0),
          "s_z": cfg.options.get("s_z", -0.5)}
    g = cfg.grid
    lams = np.linspace(0.0, float(g.get("stop", 2.0)), int(g.get("num", 101)))
    grid = phase_diagram(lams, lams, **kw)
    ll, lp = np.meshgrid(lams, lams)
    table = np.column_stack([ll.ravel(), lp.ravel(), grid.ravel().astype(float)])
    boundary = phase_boundary(n_angles=int(g.get("n_angles", 721)), **kw)
    report = {}
    if boundary.size:
        k = int(np.argmin(boundary[:, 3]))
        report = {"min_radius": float(boundary[k, 3]), "min_theta": float(boundary[k, 0]),
                  "min_lam": float(boundary[k, 1]), "min_lam_prime": float(boundary[k, 2])}
    return {"tables": {"phase_map": (["lam", "lam_prime", "superradiant"], table),
                       "phase_boundary": (["theta", "lam", "lam_prime", "radius"], boundary)},
            "truncation": None, "report": report}


def _join(parts):
    """Concatenate per-time results (series, arrays, dicts of arrays) along time."""
    first = parts[0]
    if first is None:
        return None
    if isinstance(first, CorrelatorSeries):
        return CorrelatorSeries(first.kind, np.concatenate([p.times for p in parts]),
                                np.concatenate([p.values for p in parts]), first.meta)
    if isinstance(first, np.ndarray):
        return np.concatenate(parts)
    if isinstance(first, dict):
        return {k: _join([p[k] for p in parts]) for k in first}
    return type(first)(**{f.name: _join([getattr(p, f.name) for p in parts])
                          for f in dataclasses.fields(first)})


def _stream(ctx, ops, times, rtol, per_point):
    """Propagate without storing snapshots; per_point(t_array, ops) runs at each grid time."""
    parts = []
    res = propagate(ctx, ops, times, rtol=rtol, keep=False,
                    visitor=lambda i, t, y: parts.append(per_point(np.array([t]), y)))
    return _join(parts), res.diagnostics


def _dynamic(cfg: RunConfig) -> dict:
    spec = cfg.model_spec()
    bath = cfg.bath_spec()
    opts = cfg.options
    geom, trunc = resolve_geometry(cfg, spec, temperature=bath.temperature)
    ctx = GeneratorContext(spec, bath, geom)
    ens = Ensemble(thermal_state(ctx.hamiltonian, bath.temperature))
    times = cfg.times()
    rtol = float(opts.get("rtol", 1e-8))
    task = cfg.task
    series = {}
    report = {}

    if cfg.operators == "aa" or task is Task.G2:
        a = boson_ops(geom)[0].data
        br, diag = _stream(ctx, [a, number_op(geom).data], times, rtol,
                           lambda t, y: otoc_g2_bridge(ens, y[:1], y[1:], t, a_ref=a))
        main = br.c_aa
        series.update({"C_aa": (times, br.c_aa.values), "D": (times, br.D.values),
                       "I": (times, br.I.values), "F": (times, br.F.values),
                       "g2": (times, br.g2.values), "photon_number": (times, br.photon_number)})
        report["bridge_residual"] = br.residual
        if task is Task.G2:
            report["light"] = classify_light(br.g2)
    else:
        q, p = (o.data for o in quadrature_ops(geom))
        ops = [q]
        composite = bool(opts.get("composite_d", False)) and task in (Task.OTOC_SUITE, Task.ALPHA)
        if composite:
            ops.append(q @ q)
        if task in (Task.OTOC_SUITE, Task.ALPHA):
            dec, diag = _stream(ctx, ops, times, rtol, lambda t, y: otoc_decomposition(
                ens, y[:1], p, t, composite=y[1:] if composite else None))
            main = dec.C
            series.update({"C_herm": (times, dec.C.values), "D": (times, dec.D.values),
                           "I": (times, dec.I.values), "F": (times, dec.F.values)})
            if dec.D_composite is not None:
                series["D_composite"] = (times, dec.D_composite.values)
            report["decomposition_residual"] = dec.residual
            if task is Task.ALPHA:
                al = alpha_t(dec.C, dec.D, dec.I)
                with np.errstate(divide="ignore", invalid="ignore"):
                    series["alpha"] = (times, al.values)
                    series["sqrt_I_over_D"] = (times, np.sqrt(dec.I.real / dec.D.real))
                    series["sqrt_C_over_I"] = (times, np.sqrt(dec.C.real / dec.I.real))
                finite = np.isfinite(al.real)
                report["max_abs_alpha"] = float(np.max(np.abs(al.real[finite]))) if finite.any() else None
                report["undefined_points"] = al.meta["undefined_points"]
        elif task is Task.SKEW_RELATIONS:
            rel, diag = _stream(ctx, ops, times, rtol,
                                lambda t, y: relation_suite(ens, y[:1], p, t))
            main = None
            series.update({k: (times, v) for k, v in rel.series.items()})
            report["max_residual"] = rel.max_residual
        else:
            main, diag = _stream(ctx, ops, times, rtol,
                                 lambda t, y: otoc_hermitian(ens, y[:1], p, t))
            series["C_herm"] = (times, main.values)

    if main is not None:
        report["max"] = float(np.max(main.real))
        report["scrambling_time"] = scrambling_time(main)
    if main is not None and (task is Task.LYAPUNOV or "window" in opts):
        report["fit"] = _fit_report(main, opts, bath.temperature)
    if task is Task.LONG_TIME:
        report["long_time"] = classify_longtime(
            main, float(opts.get("tail_fraction", 0.25)),
            float(opts.get("decay_threshold", 0.02)),
            float(opts.get("oscillation_threshold", 0.5))).value
    return {"series": _series_pack(series), "truncation": trunc, "report": report,
            "diagnostics": diag}


def _fit_report(series, opts, temperature) -> dict:
    mode = FitMode(opts.get("fit_mode", "raw"))
    window = opts.get("window")
    out = {"mode": mode.value}
    if window is None:
        try:
            window = auto_window(series, float(opts.get("min_len", 2.0)),
                                 r2_min=float(opts.get("r2_min", 0.98)))
        except NoWindowError:
            out["window"] = None
            out["note"] = "no exponential window"
            return out
        out["auto_window"] = True
    fit = fit_lyapunov(series, window, mode=mode, temperature=temperature)
    out.update(fit.to_dict())
    return out


def compute(cfg: RunConfig) -> dict:
    if cfg.task is Task.GROUND_SCAN:
        return _ground_scan(cfg)
    if cfg.task is Task.PHASE_DIAGRAM:
        return _phase_diagram(cfg)
    return _dynamic(cfg)


def _compute_dict(d):
    return compute(RunConfig.from_dict(d))


# -- output -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_table(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows):
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def write_series(path: Path, times, values):
    values = np.asarray(values, complex)
    write_table(path, ["t", "re", "im"], np.column_stack([times, values.real, values.imag]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def _plot(path: Path, title: str, curves, log_y=False, xlabel="t"):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in curves:
        y = np.real(np.asarray(y))
        if log_y:
            y = np.where(y > 0, y, np.nan)
        ax.plot(x, y, label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _label(cfg: RunConfig, value) -> str:
    key = cfg.sweep["parameter"].split(".")[-1]
    return f"{key}={value:g}" if isinstance(value, (int, float)) else f"{key}={value}"


def run(cfg: RunConfig, out_dir: Path, jobs: int = 1) -> int:
    """Compute every sweep point and write CSV, JSON metadata and an SVG plot."""
    points = cfg.points()
    results = [None] * len(points)
    failure = None
    try:
        if jobs > 1 and len(points) > 1:
            with ProcessPoolExecutor(min(jobs, len(points))) as pool:
                results = list(pool.map(_compute_dict, [p.to_dict() for p in points]))
        else:
            for i, p in enumerate(points):
                results[i] = compute(p)
    except (IntegrationError, TruncationError, FitError, np.linalg.LinAlgError,
            RuntimeError) as exc:
        failure = exc
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"version": __version__, "config": cfg.to_dict(), "points": []}
    if failure is not None:
        meta["error"] = {"type": type(failure).__name__, "message": str(failure),
                         "time": getattr(failure, "time", None)}
        _write_json(out_dir / "metadata.json", meta)
        log.error("numerical failure: %s", failure)
        return EXIT_NUMERIC

    curves = {}
    for i, (p, res) in enumerate(zip(points, results)):
        suffix = f"_{i:02d}" if cfg.sweep else ""
        label = _label(cfg, cfg.sweep["values"][i]) if cfg.sweep else ""
        entry = {"label": label, "suffix": suffix, "truncation": res.get("truncation"),
                 "report": res.get("report", {}), "diagnostics": res.get("diagnostics")}
        if cfg.sweep:
            entry["value"] = cfg.sweep["values"][i]
        for name, (header, table) in res.get("tables", {}).items():
            write_table(out_dir / f"{name}{suffix}.csv", header, table)
            curves.setdefault(name, []).append((label or name, table[:, 0], table[:, 1]))
        for name, (t, v) in res.get("series", {}).items():
            write_series(out_dir / f"{name}{suffix}.csv", t, v)
            curves.setdefault(name, []).append((label or name, t, v))
        meta["points"].append(entry)
    _write_json(out_dir / "metadata.json", meta)
    _render(cfg, out_dir, curves)
    return EXIT_OK


def _render(cfg: RunConfig, out_dir: Path, curves: dict):
    task = cfg.task
    main = {Task.GROUND_SCAN: "ground_scan", Task.OTOC: "C_herm", Task.OTOC_SUITE: "C_herm",
            Task.ALPHA: "alpha", Task.SKEW_RELATIONS: "reg_cc", Task.G2: "g2",
            Task.LYAPUNOV: "C_herm", Task.LONG_TIME: "C_herm"}.get(task)
    if cfg.operators == "aa" and task in (Task.OTOC, Task.LYAPUNOV, Task.LONG_TIME):
        main = "C_aa"
    if task is Task.GROUND_SCAN and "ground_trace" in curves:
        main = "ground_trace"
    if task is Task.PHASE_DIAGRAM:
        main = "phase_boundary"
        curves = {main: [("boundary", *_boundary_xy(out_dir))]}
    if main not in curves:
        return
    log_y = task is Task.LYAPUNOV
    xlabel = {Task.GROUND_SCAN: "lambda", Task.PHASE_DIAGRAM: "lambda"}.get(task, "t")
    if main == "ground_trace":
        xlabel = "t"
    _plot(out_dir / f"{main}.svg", f"{task.value}: {main}", curves[main], log_y, xlabel)


def _boundary_xy(out_dir: Path):
    data = np.loadtxt(out_dir / "phase_boundary.csv", delimiter=",", skiprows=1, ndmin=2)
    return (data[:, 1], data[:, 2]) if data.size else (np.array([]), np.array([]))


def _write_json(path: Path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- entry point ------------------------------------------------------------

def output_root(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_ENV, "dicke_chaos_runs"))


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    from .presets import FIGURES, figure_configs

    parser = argparse.ArgumentParser(prog="dicke-chaos", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for task in Task:
        p = sub.add_parser(task.value, help=f"run the {task.value} task")
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<task>)")
    rp = sub.add_parser("reproduce", help="run a bundled figure preset")
    rp.add_argument("--figure", required=True, help="fig1 ... fig15")
    rp.add_argument("--jobs", type=int, default=1)
    rp.add_argument("--out", help=f"output root (default ${OUT_ENV})")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "reproduce":
        fig = args.figure.lower()
        if fig not in FIGURES:
            print(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}",
                  file=sys.stderr)
            return EXIT_CONFIG
        root = output_root(args.out) / fig
        code = EXIT_OK
        for name, cfg in figure_configs(fig):
            code = max(code, run(cfg, root / name if name else root, args.jobs))
        return code

    try:
        cfg = load_config(args.config)
        if cfg.task.value != args.command:
            raise ConfigError(f"config task {cfg.task.value!r} does not match command "
                              f"{args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(cfg.output) if cfg.output else \
        output_root(None) / cfg.task.value
    return run(cfg, out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
