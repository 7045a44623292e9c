"""Command-line experiment runner.

    python -m twopoint_wave run    --preset paper-grid --out out/run
    python -m twopoint_wave verify --preset paper-grid --out out/verify
    python -m twopoint_wave blowup --preset blowup --out out/blowup
    python -m twopoint_wave decay  --preset decay --out out/decay
    python -m twopoint_wave sweep  --config sweep.yaml --workers 4

Every output file carries the config hash; summary.json holds the full
config, so it is enough to re-run an experiment.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Optional

import numpy as np

from .config import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    ExperimentConfig,
    config_hash,
    config_to_dict,
    expand_sweep,
    load_config,
    preset,
)
from .diagnostics import (
    DiagnosticsError,
    SERIES_COLUMNS,
    blowup_functional_L,
    blowup_time_bound,
    fit_exponential_decay,
    functional_H,
    nondecreasing_within,
)
from .solver import run_simulation, step_doubling_estimates
from .verification import convergence_study, default_dt_rule, fixed_dt_rule

__all__ = ["main", "run_command", "EXIT_CODES", "format_number", "dump_json"]

EXIT_CODES = {"ok": 0, "validation": 2, "picard": 3, "blowup": 4, "io": 5}
SUBCOMMANDS = ("run", "verify", "blowup", "decay", "sweep")


# ---------------------------------------------------------------- writers


def format_number(v) -> str:
    return "%.17g" % v


def _json_scalar(v) -> str:
    if v is None or isinstance(v, (bool, np.bool_)):
        return {None: "null", True: "true", False: "false"}[None if v is None else bool(v)]
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_number(v) if math.isfinite(v) else "null"
    s = str(v)
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dump_json(obj, indent: int = 0) -> str:
    """JSON with 17-significant-digit floats and null for NaN/inf."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_json_scalar(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_scalar(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dump_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    return _json_scalar(obj)


def _write_table(path_stem: str, fmt: str, chash: str, header: list, rows: list) -> str:
    if fmt == "json":
        path = path_stem + ".json"
        doc = {"config_hash": chash, "columns": header, "rows": [list(r) for r in rows]}
        text = dump_json(doc) + "\n"
    else:
        path = path_stem + ".csv"
        lines = [f"# config_hash: {chash}", ",".join(header)]
        for r in rows:
            lines.append(",".join(v if isinstance(v, str) else format_number(v) for v in r))
        text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------- pieces


def _trajectory_outputs(out: str, fmt: str, chash: str, cfg: ExperimentConfig, traj, series) -> list:
    cols = list(SERIES_COLUMNS)
    rows = [[t] + [series.values[c][k] for c in cols] for k, t in enumerate(series.times)]
    files = [_write_table(os.path.join(out, "series"), fmt, chash, ["t"] + cols, rows)]
    header = ["t"] + [f"x_{j}" for j in range(cfg.grid.N + 1)]
    srows = [[s.t] + list(s.U) for s in traj.snapshots]
    files.append(_write_table(os.path.join(out, "snapshots"), fmt, chash, header, srows))
    return files


def _termination(traj) -> dict:
    return asdict(traj.termination)


def _simulate(cfg: ExperimentConfig):
    return run_simulation(cfg.solver, cfg.params, cfg.data, cfg.grid, cfg.diagnostics)


def _cmd_run(cfg, out, fmt, chash, summary) -> int:
    traj, series = _simulate(cfg)
    summary["files"] = _trajectory_outputs(out, fmt, chash, cfg, traj, series)
    summary["termination"] = _termination(traj)
    summary["constants"] = series.constants
    summary["picard_iterations_max"] = max(traj.picard_iterations, default=0)
    kind = traj.termination.kind
    return EXIT_CODES["picard"] if kind == "picard_failure" else EXIT_CODES["blowup"] if kind == "blowup_detected" else 0


def _cmd_verify(cfg, out, fmt, chash, summary, N_list, dt_rule_name, workers) -> int:
    rule = default_dt_rule if dt_rule_name == "refine" else fixed_dt_rule
    rows = convergence_study(N_list, rule, cfg.solver, cfg.grid.boundary_scheme, workers)
    header = ["N", "dt", "max_abs", "l2_final", "observed_order", "status"]
    table = [
        [r.N, r.dt, r.max_abs, r.l2_final, float("nan") if r.observed_order is None else r.observed_order, r.status]
        for r in rows
    ]
    summary["files"] = [_write_table(os.path.join(out, "convergence"), fmt, chash, header, table)]
    summary["convergence"] = [asdict(r) for r in rows]
    summary["note"] = "manufactured problem with exact solution exp(x - t); config supplies solver and grid scheme"
    errs = [r.max_abs for r in rows]
    summary["errors_strictly_decreasing"] = all(b < a for a, b in zip(errs, errs[1:]))
    if any(r.status == "picard_failure" for r in rows):
        return EXIT_CODES["picard"]
    if any(r.status != "ok" for r in rows):
        return EXIT_CODES["blowup"]
    return 0


def _cmd_blowup(cfg, out, fmt, chash, summary) -> int:
    traj, series = _simulate(cfg)
    summary["files"] = _trajectory_outputs(out, fmt, chash, cfg, traj, series)
    summary["termination"] = _termination(traj)
    summary["constants"] = series.constants
    H = series.values["H"]
    H0 = float(H[0])
    res = {"H0": H0, "H0_positive": H0 > 0}
    res["blowup_detected"] = traj.termination.kind == "blowup_detected"
    res["blowup_time"] = traj.termination.t if res["blowup_detected"] else None
    if cfg.solver.record_every == 1 and len(traj.snapshots) > 1:
        h = cfg.diagnostics.h_tilde
        est = step_doubling_estimates(
            traj, cfg.params, cfg.data, cfg.grid, lambda s: functional_H(s, cfg.params, cfg.grid, h)
        )
        ok, _ = nondecreasing_within(H, est, 10.0)
        res["H_nondecreasing_within_tolerance"] = ok
    if cfg.diagnostics.d2 is not None and H0 > 0:
        try:
            fc = cfg.diagnostics.resolved(cfg.params)
            L0 = blowup_functional_L(traj.snapshots[0], cfg.params, cfg.grid, fc)
            res["L0"] = L0
            res["T_star_bound"] = blowup_time_bound(fc.eta, fc.d2, L0)
        except DiagnosticsError as exc:
            res["T_star_bound_error"] = str(exc)
    summary["blowup"] = res
    return EXIT_CODES["picard"] if traj.termination.kind == "picard_failure" else 0


def _cmd_decay(cfg, out, fmt, chash, summary) -> int:
    traj, series = _simulate(cfg)
    summary["files"] = _trajectory_outputs(out, fmt, chash, cfg, traj, series)
    summary["termination"] = _termination(traj)
    summary["constants"] = series.constants
    kind = traj.termination.kind
    if kind != "completed":
        return EXIT_CODES["picard"] if kind == "picard_failure" else EXIT_CODES["blowup"]
    E, I, sL = series.values["E"], series.values["I"], series.values["script_L"]
    c = series.constants
    res = {
        "eta_star": c.get("eta_star"),
        "r": c.get("r"),
        "decay_condition": bool(c.get("eta_star") is not None and c["eta_star"] < 1.0),
        "I_positive": bool(np.all(I > 0)),
    }
    try:
        window = cfg.fit_window or (0.5 * cfg.solver.t_final, cfg.solver.t_final)
        fit = fit_exponential_decay(series.times, E, window)
        res["fit"] = {"C": fit.C, "gamma": fit.gamma, "residual": fit.residual, "window": list(fit.window)}
    except DiagnosticsError as exc:
        res["fit_error"] = str(exc)
    if "beta1" in c:
        slack = 1e-12 * np.maximum(1.0, np.abs(E))
        res["sandwich_ok"] = bool(np.all(c["beta1"] * E <= sL + slack) and np.all(sL <= c["beta2"] * E + slack))
    summary["decay"] = res
    return 0


def run_command(
    subcommand: str,
    cfg: ExperimentConfig,
    out: Optional[str] = None,
    fmt: str = "csv",
    workers: int = 1,
    N_list=(5, 10, 20, 40),
    dt_rule: str = "refine",
    sweep_command: str = "run",
) -> int:
    """Run one subcommand, write its files under ``out``, return the exit code."""
    out = out if out is not None else cfg.outputs.dir
    if subcommand == "sweep":
        return _cmd_sweep(cfg, out, fmt, workers, sweep_command)
    chash = config_hash(cfg)
    summary: dict = {
        "subcommand": subcommand,
        "config_hash": chash,
        "config": config_to_dict(cfg),
        "warnings": list(cfg.warnings),
    }
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out!r}: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    try:
        if subcommand == "run":
            code = _cmd_run(cfg, out, fmt, chash, summary)
        elif subcommand == "verify":
            code = _cmd_verify(cfg, out, fmt, chash, summary, list(N_list), dt_rule, workers)
        elif subcommand == "blowup":
            code = _cmd_blowup(cfg, out, fmt, chash, summary)
        elif subcommand == "decay":
            code = _cmd_decay(cfg, out, fmt, chash, summary)
        else:
            raise ValueError(f"unknown subcommand {subcommand!r}")
    except OSError as exc:
        code = EXIT_CODES["io"]
        summary["error"] = f"I/O error: {exc}"
    except (ConfigValidationError, DiagnosticsError, ValueError) as exc:
        code = EXIT_CODES["validation"]
        summary["error"] = f"{type(exc).__name__}: {exc}"
    summary["exit_code"] = code
    try:
        with open(os.path.join(out, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_json(summary) + "\n")
    except OSError as exc:
        print(f"error: cannot write summary: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    return code


def _sweep_point(args) -> tuple:
    cfg, out, fmt, command = args
    return cfg.name, out, run_command(command, cfg, out, fmt)


def _cmd_sweep(cfg, out, fmt, workers, command) -> int:
    points = expand_sweep(cfg)
    jobs = [(p, os.path.join(out, p.name), fmt, command) for p in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    summary = {
        "subcommand": "sweep",
        "point_command": command,
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
        "points": [{"name": n, "dir": d, "exit_code": c} for n, d, c in results],
    }
    code = max((c for _, _, c in results), default=0)
    summary["exit_code"] = code
    try:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_json(summary) + "\n")
    except OSError:
        return EXIT_CODES["io"]
    return code


# ---------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twopoint-wave", description="Damped nonlinear wave with two-point boundary coupling")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="PATH", help="YAML experiment config")
        src.add_argument("--preset", metavar="NAME", help="built-in preset: paper-grid, blowup, decay")
        sp.add_argument("--out", metavar="DIR", help="output directory (default: outputs.dir of the config)")
        sp.add_argument("--workers", type=int, default=1, metavar="K")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (summary is always JSON)")
        if name == "verify":
            sp.add_argument("--N", type=int, nargs="+", default=[5, 10, 20, 40], help="grid sizes")
            sp.add_argument("--dt-rule", choices=("refine", "fixed"), default="refine",
                            help="refine: dt = min(0.08, 2/N^2); fixed: dt = 0.08")
        if name == "sweep":
            sp.add_argument("--command", dest="point_command", choices=("run", "blowup", "decay"), default="run")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = preset(args.preset) if args.preset else load_config(args.config)
    except ConfigValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CODES["validation"]
    except (ConfigParseError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["validation"]
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CODES["validation"]
    try:
        return run_command(
            args.command, cfg, args.out, args.format, args.workers,
            N_list=getattr(args, "N", (5, 10, 20, 40)),
            dt_rule=getattr(args, "dt_rule", "refine"),
            sweep_command=getattr(args, "point_command", "run"),
        )
    except Exception:  # last resort: keep the exit-code contract
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
