"""Experiment configuration, execution and table emission.

A run is described by a flat :class:`ExperimentConfig`. :func:`run` resolves
every default, executes the experiment and returns a :class:`RunReport`;
:func:`emit_tables` writes the report as a JSON manifest, one CSV per table and
a long-format ``plot.csv``. Emitted bytes depend only on the config, so two
runs with the same seed produce identical files.
"""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from . import functionals as fn
from .errors import BlowUpError, ConfigError, DiagnosticError, ParameterError, SweepError
from .estimates import dyadic, interactions
from .evolution import (
    EquationSpec,
    Family,
    SolverConfig,
    default_dt,
    evolve,
    inviscid_limit_sweep,
    scaling_check,
)
from .profiles import PROFILES, make_profile
from .spectral import PeriodicGrid, forward_transform

SCHEMA_VERSION = "1.0"
KINDS = ("evolve", "conserve", "inviscid-sweep", "scaling", "miura", "jbounds", "linfs", "strichartz")
ABORTED = "aborted"

FAMILIES = tuple(f.value for f in Family)

# per-kind defaults for keys whose meaning depends on the experiment
KIND_DEFAULTS = {
    "inviscid-sweep": {"eps_list": [1e-1, 1e-2, 1e-3, 1e-4], "s": 1.0},
    "linfs": {"eps_list": [0.0, 1e-2, 1.0], "s": 1.0, "window": 8.0, "time_samples": 256},
    "strichartz": {"N": 32768, "k_list": [3, 4, 5, 6, 7], "window": 4.0, "time_samples": 64},
}


class ExperimentConfig(BaseModel):
    """Flat experiment description; every key is also a CLI flag."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal[KINDS]
    L: float = 64 * math.pi
    N: int | None = None
    family: Literal[FAMILIES] = "mkdv"
    epsilon: float = 0.0
    alpha: float = 1.0
    profile: Literal[PROFILES] = "gaussian"
    amplitude: float = 0.5
    width: float = 2.0
    mode: int = 1
    band: tuple[float, float] = (0.0, 2.0)
    T: float = 1.0
    dt: float | None = None
    record_every: int = 1
    dealias_fraction: float | None = None
    eps_list: list[float] | None = None
    s: float | None = None
    drop_largest: int = 0
    lambdas: list[float] = [1.0, 0.5]
    n_scaled: int | None = None
    snapshot_dt: float = 0.05
    refinements: int = 2
    cases: list[Literal[interactions.CASES]] = list(interactions.CASES)
    trials: int = 20
    n_axis: int = 8
    k_list: list[int] | None = None
    window: float | None = None
    time_samples: int | None = None
    out: str | None = None
    seed: int = 0

    @field_validator("L")
    @classmethod
    def _positive_length(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("must be positive and finite")
        return v

    @field_validator("N")
    @classmethod
    def _even_size(cls, v):
        if v is not None and (v < 8 or v % 2):
            raise ValueError("must be an even integer >= 8")
        return v

    @field_validator("epsilon")
    @classmethod
    def _eps_range(cls, v):
        if not (0 <= v <= 1):
            raise ValueError(f"must lie in (0, 1] (or be 0 for a non-dissipative family), got {v}")
        return v

    @field_validator("alpha")
    @classmethod
    def _alpha_range(cls, v):
        if not (0 < v <= 1):
            raise ValueError(f"must lie in (0, 1], got {v}")
        return v

    @field_validator("T")
    @classmethod
    def _time_range(cls, v):
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError("must be non-negative and finite")
        return v

    @field_validator("dt", "snapshot_dt", "window")
    @classmethod
    def _positive_step(cls, v):
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValueError("must be positive")
        return v

    @field_validator("record_every", "trials", "refinements", "time_samples", "mode")
    @classmethod
    def _positive_int(cls, v):
        if v is not None and v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("eps_list")
    @classmethod
    def _eps_list_range(cls, v):
        if v is not None and any(not (0 <= e <= 1) for e in v):
            raise ValueError("every entry must lie in [0, 1]")
        return v

    @field_validator("lambdas")
    @classmethod
    def _lambda_range(cls, v):
        if not v or any(not (0 < x <= 1) for x in v):
            raise ValueError("every entry must lie in (0, 1]")
        return v

    @model_validator(mode="after")
    def _consistency(self):
        fam = Family(self.family)
        if fam.dissipative and self.epsilon == 0:
            raise ValueError(f"family {fam.value} needs epsilon in (0, 1]")
        if not fam.dissipative and self.epsilon != 0:
            raise ValueError(
                f"family {fam.value} with epsilon={self.epsilon}: "
                f"a dissipative epsilon requires family {fam.value}-b"
            )
        if self.kind in ("inviscid-sweep", "scaling", "miura") and fam not in (Family.MKDV, Family.MKDV_B):
            raise ValueError(f"experiment {self.kind} runs the MKdV family; got family {fam.value}")
        return self

    def resolved(self):
        """Copy with every kind-dependent default filled in (``dt`` excepted; see ``run``)."""
        updates = {"N": 1024}
        updates.update(KIND_DEFAULTS.get(self.kind, {}))
        data = self.model_dump()
        for key, val in updates.items():
            if data.get(key) is None:
                data[key] = val
        return ExperimentConfig(**data)


def _format_validation(exc):
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"].removeprefix("Value error, ")
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        lines.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(lines)


def make_config(data):
    """Validate a mapping into an :class:`ExperimentConfig`, raising :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping of keys to values")
    try:
        cfg = ExperimentConfig(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_validation(exc)}") from None
    return cfg.resolved()


def parse_config(text):
    """Parse a YAML or JSON document (JSON is a subset of YAML)."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML/JSON: {exc}") from None
    return make_config(data or {})


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


@dataclass
class Table:
    name: str
    columns: list
    units: list
    rows: list = field(default_factory=list)
    x: str | None = None

    def add(self, *row):
        self.rows.append(tuple(row))


@dataclass
class RunReport:
    config: dict
    tables: list = field(default_factory=list)
    status: str = "complete"
    failures: list = field(default_factory=list)
    step_counts: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    schema_version: str = SCHEMA_VERSION

    def table(self, name):
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def fail(self, what):
        self.status = "partial"
        self.failures.append(what)


def _setup(cfg):
    try:
        grid = PeriodicGrid(cfg.L, cfg.N)
        phi = make_profile(grid, cfg.profile, cfg.amplitude, cfg.width, cfg.mode, cfg.band, cfg.seed)
        eq = EquationSpec(Family(cfg.family), cfg.epsilon, cfg.alpha)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    return grid, phi, eq


def _solver(cfg, phi, eq):
    dt = cfg.dt if cfg.dt is not None else default_dt(phi, eq)
    return SolverConfig(dt, cfg.dealias_fraction, cfg.record_every)


def _run_evolve(cfg, report, conserve=False):
    grid, phi, eq = _setup(cfg)
    scfg = _solver(cfg, phi, eq)
    report.config["dt"] = scfg.dt
    try:
        traj = evolve(phi, eq, cfg.T, scfg)
    except BlowUpError as exc:
        traj = exc.trajectory
        report.fail({"stage": "evolve", "time": exc.time, "message": str(exc)})
    report.step_counts["evolve"] = traj.steps
    report.config["dt"] = traj.dt
    report.arrays["trajectory_times"] = np.asarray(traj.times)
    report.arrays["trajectory_samples"] = np.asarray(traj.samples)
    snap = Table("snapshots", ["time", "l2", "max_abs"], ["1", "1", "1"], x="time")
    for t, u in zip(traj.times, traj.fields):
        snap.add(float(t), math.sqrt(fn.l2_squared(u)), float(np.max(np.abs(u.samples))))
    report.tables.append(snap)
    if not conserve:
        return
    names = {
        Family.MKDV: ["l2", "h1_mkdv", "h2p_mkdv"],
        Family.MKDV_B: ["l2", "h1_mkdv", "h2p_mkdv"],
        Family.KDV: ["l2", "h1_kdv"],
        Family.KDV_B: ["l2", "h1_kdv"],
    }[eq.family]
    reports = [fn.functional_report(traj, n) for n in names]
    values = Table("functionals", ["time"] + names, ["1"] * (len(names) + 1), x="time")
    for i, t in enumerate(traj.times):
        values.add(float(t), *(float(r.values[i]) for r in reports))
    drift = Table(
        "drift",
        ["functional", "relative_drift", "budget_residual", "boundary_decay"],
        ["-", "1", "1", "1"],
    )
    for r in reports:
        drift.add(r.name, r.drift, r.budget_residual if r.budget_residual is not None else ABORTED, r.boundary_decay)
    report.tables += [values, drift]


def _run_sweep(cfg, report):
    grid, phi, _ = _setup(cfg)
    eq0 = EquationSpec(Family.MKDV)
    scfg = _solver(cfg, phi, eq0)
    report.config["dt"] = scfg.dt
    try:
        sw = inviscid_limit_sweep(
            phi, cfg.eps_list, cfg.alpha, cfg.s, cfg.T, scfg, cfg.drop_largest, on_error="record"
        )
    except BlowUpError as exc:
        report.fail({"stage": "reference", "epsilon": 0.0, "time": exc.time, "message": str(exc)})
        report.tables.append(_sweep_table([], None))
        return
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    for e in sw.failed:
        report.fail({"stage": "sweep member", "epsilon": e})
    report.step_counts["per_run"] = max(1, math.ceil(cfg.T / scfg.dt - 1e-9)) if cfg.T else 0
    report.tables.append(_sweep_table(list(zip(sw.epsilons, sw.errors)), sw.slope))
    report.config["sweep_monotone"] = sw.monotone


def _sweep_table(rows, slope):
    t = Table("sweep", ["epsilon", "sup_Hs_error", "slope_fit"], ["1", "1", "1"], x="epsilon")
    for e, err in rows:
        t.add(e, ABORTED if err is None else err, ABORTED if slope is None else slope)
    return t


def _run_scaling(cfg, report):
    grid, phi, eq = _setup(cfg)
    scfg = _solver(cfg, phi, eq)
    report.config["dt"] = scfg.dt
    t = Table(
        "scaling", ["lambda", "epsilon", "alpha", "n_scaled", "discrepancy"], ["1", "1", "1", "1", "1"], x="lambda"
    )
    for lam in cfg.lambdas:
        n_scaled = cfg.n_scaled or grid.N
        try:
            gap = scaling_check(phi, lam, eq.epsilon, eq.alpha, cfg.T, scfg, n_scaled)
        except BlowUpError as exc:
            report.fail({"stage": "scaling", "lambda": lam, "time": exc.time})
            gap = None
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        t.add(lam, eq.epsilon, eq.alpha, n_scaled, ABORTED if gap is None else gap)
    report.tables.append(t)


def _run_miura(cfg, report):
    grid, phi, eq = _setup(cfg)
    if eq.family != Family.MKDV:
        raise ConfigError("miura needs family mkdv (epsilon = 0)")
    base = _solver(cfg, phi, eq).dt
    t = Table("miura", ["snapshot_dt", "residual", "ratio"], ["1", "1", "1"], x="snapshot_dt")
    prev = None
    h = cfg.snapshot_dt
    for level in range(cfg.refinements + 1):
        # integrator step divides the snapshot spacing exactly
        sub = max(1, math.ceil(h / base - 1e-9))
        scfg = SolverConfig(h / sub, cfg.dealias_fraction, sub)
        T = cfg.T if cfg.T >= 2 * h else 2 * h
        T = round(T / h) * h
        try:
            traj = evolve(phi, eq, T, scfg)
            res = fn.miura_consistency(traj)
        except BlowUpError as exc:
            report.fail({"stage": "miura", "snapshot_dt": h, "time": exc.time})
            res = None
        report.step_counts[f"snapshot_dt={h!r}"] = round(T / scfg.dt)
        ratio = prev / res if prev is not None and res else None
        t.add(h, ABORTED if res is None else res, ABORTED if ratio is None else ratio)
        prev = res
        h /= 2
    report.tables.append(t)


def _run_jbounds(cfg, report):
    rows = Table(
        "jbounds",
        ["case", "k1", "k2", "k3", "k4", "j1", "j2", "j3", "j4", "max_ratio", "bound", "two_path_rel_diff"],
        ["-"] + ["1"] * 11,
    )
    summary = Table("jbound_cases", ["case", "spread", "stable"], ["-", "1", "-"])
    for case in cfg.cases:
        blocks = interactions.default_blocks(case, cfg.n_axis)
        sweep = interactions.sweep_J_bounds(case, blocks, cfg.trials, cfg.n_axis, cfg.seed)
        for r in sweep.reports:
            rng = interactions.trial_rng(cfg.seed, case, r.ks, r.js, 0)
            fs = [interactions.BlockFunction.random(k, j, cfg.n_axis, rng) for k, j in zip(r.ks, r.js)]
            a = interactions.brute_force_J(*fs)
            b = interactions.convolution_J(*fs)
            rel = abs(a - b) / abs(a) if a else abs(b)
            rows.add(case, *r.ks, *r.js, r.max_ratio, r.bound, rel)
        summary.add(case, sweep.spread, str(sweep.stable).lower())
    report.tables += [rows, summary]


def _run_linfs(cfg, report):
    grid, phi, _ = _setup(cfg)
    try:
        tab = dyadic.check_linear_fs_bound(
            forward_transform(phi), cfg.eps_list, cfg.alpha, cfg.s, cfg.window, cfg.time_samples
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    t = Table("linfs", ["epsilon", "ratio"], ["1", "1"], x="epsilon")
    for e, r in zip(tab.epsilons, tab.ratios):
        t.add(e, ABORTED if r is None else r)
    s = Table("linfs_summary", ["spread", "flagged"], ["1", "-"])
    s.add(ABORTED if tab.spread is None else tab.spread, str(tab.flagged).lower())
    report.tables += [t, s]


def _run_strichartz(cfg, report):
    grid, _, _ = _setup(cfg)
    t = Table("strichartz", ["k", "ratio"], ["1", "1"], x="k")
    vals = []
    for k in cfg.k_list:
        try:
            f = dyadic.random_shell_data(grid, k, cfg.seed + k)
            r = dyadic.airy_l6_ratio(k, f, cfg.window, cfg.time_samples)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        vals.append(r)
        t.add(k, ABORTED if r is None else r)
    good = [v for v in vals if v]
    s = Table("strichartz_summary", ["max_over_min"], ["1"])
    s.add(max(good) / min(good) if good else ABORTED)
    report.tables += [t, s]


RUNNERS = {
    "evolve": _run_evolve,
    "conserve": lambda c, r: _run_evolve(c, r, conserve=True),
    "inviscid-sweep": _run_sweep,
    "scaling": _run_scaling,
    "miura": _run_miura,
    "jbounds": _run_jbounds,
    "linfs": _run_linfs,
    "strichartz": _run_strichartz,
}


def run(config, out=None):
    """Execute the configured experiment; write files when ``out`` or ``config.out`` is set."""
    if isinstance(config, dict):
        config = make_config(config)
    config = config.resolved()
    report = RunReport(config=config.model_dump(mode="json"))
    start = time.perf_counter()
    try:
        RUNNERS[config.kind](config, report)
    except (SweepError, DiagnosticError) as exc:
        report.fail({"stage": config.kind, "message": str(exc)})
    report.wall_clock = time.perf_counter() - start
    target = out or config.out
    if target is not None:
        emit_tables(report, target)
    return report


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode()


def _plot_rows(tables):
    rows = []
    for t in tables:
        if t.x is None:
            continue
        xi = t.columns.index(t.x)
        for ci, col in enumerate(t.columns):
            if ci == xi:
                continue
            for row in t.rows:
                y = row[ci]
                if isinstance(y, (int, float, np.integer, np.floating)) and not isinstance(y, bool):
                    rows.append((f"{t.name}.{col}", row[xi], y))
    return rows


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write(path, data):
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def emit_tables(report, directory):
    """Write ``manifest.json``, ``<table>.csv`` files and ``plot.csv``; return the paths written.

    Wall-clock time is left out so the files are byte-stable across reruns.
    """
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {d}: {exc.strerror}") from None
    written = []
    files = {}
    for t in report.tables:
        name = f"{t.name}.csv"
        _write(d / name, _csv_bytes(t.columns, t.rows))
        files[t.name] = {
            "file": name,
            "columns": [{"name": c, "unit": u} for c, u in zip(t.columns, t.units)],
            "rows": len(t.rows),
        }
        written.append(d / name)
    plot = _plot_rows(report.tables)
    if plot:
        _write(d / "plot.csv", _csv_bytes(["series", "x", "y"], plot))
        written.append(d / "plot.csv")
    arrays = {}
    for key, arr in sorted(report.arrays.items()):
        name = f"{key}.npy"
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
        _write(d / name, buf.getvalue())
        arrays[key] = {"file": name, "shape": list(np.shape(arr))}
        written.append(d / name)
    manifest = {
        "schema_version": report.schema_version,
        "status": report.status,
        "config": report.config,
        "failures": report.failures,
        "step_counts": report.step_counts,
        "tables": files,
        "arrays": arrays,
    }
    text = json.dumps(_json_safe(manifest), indent=2, sort_keys=True) + "\n"
    _write(d / "manifest.json", text.encode())
    written.insert(0, d / "manifest.json")
    return written


def exit_code(report):
    return 0 if report.status == "complete" else 2
