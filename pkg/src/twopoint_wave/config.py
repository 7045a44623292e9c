"""Experiment configuration: YAML documents, presets, validation, hashing.

A document looks like::

    name: paper-grid
    mode: general            # general | blowup | decay
    problem:
      parameters: {lambda: 1, lambda0: 1, lambda1: 1,
                   lambda_tilde0: -0.5, lambda_tilde1: -0.5, p: 3, alpha: 4, beta: 4}
      data: {h_tilde0: "exp(3-2*t)", ..., u0: "exp(x)", u1: "-exp(x)"}
    grid: {N: 10, boundary_scheme: half-cell}
    solver: {dt: 0.08, t_final: 5.0, ...}
    diagnostics: {h_tilde: 0.0, eta: null, ..., fit_window: null}   # null: [t_final/2, t_final]
    outputs: {dir: out, formats: [csv, json]}
    sweep: {grid.N: [10, 20], solver.dt: [0.01]}   # optional, cartesian product

Functions are expression strings (numbers, x, t, e, pi, + - * / ^, exp, sin,
cos) or ``{tabulated: t, points: [...], values: [...]}`` mappings.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Optional

import yaml

from .diagnostics import FunctionalConfig
from .discretization import BOUNDARY_SCHEMES, SpatialGrid
from .expressions import ExpressionError, as_function
from .model import ProblemData, ProblemParameters, check_assumptions
from .solver import SolverConfig

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "ConfigValidationError",
    "OutputConfig",
    "ExperimentConfig",
    "PRESETS",
    "preset",
    "parse_config",
    "load_config",
    "serialize_config",
    "config_to_dict",
    "config_from_dict",
    "config_hash",
    "expand_sweep",
]

MODES = ("general", "blowup", "decay")
FORMATS = ("csv", "json")

# config key -> ProblemParameters attribute
_PARAM_KEYS = {
    "lambda": "lam", "lambda0": "lam0", "lambda1": "lam1",
    "lambda_tilde0": "lam_tilde0", "lambda_tilde1": "lam_tilde1",
    "p": "p", "alpha": "alpha", "beta": "beta",
}
_DATA_KEYS = ("h_tilde0", "h_tilde1", "g0", "g1", "f", "u0", "u1", "u0_x")
_SOLVER_KEYS = tuple(f.name for f in fields(SolverConfig))
_DIAG_KEYS = tuple(f.name for f in fields(FunctionalConfig)) + ("fit_window",)
_TOP_KEYS = ("name", "mode", "problem", "grid", "solver", "diagnostics", "outputs", "sweep")


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    """Malformed document or field; message carries the line and field path."""


class ConfigValidationError(ConfigError):
    """Well-formed document whose problem violates a hypothesis of its mode."""

    def __init__(self, message: str, failures: tuple = ()):
        super().__init__(message)
        self.failures = tuple(failures)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    mode: str = "general"
    params: ProblemParameters = field(default_factory=ProblemParameters)
    data: ProblemData = field(default_factory=ProblemData)
    grid: SpatialGrid = field(default_factory=lambda: SpatialGrid(10))
    solver: SolverConfig = field(default_factory=SolverConfig)
    diagnostics: FunctionalConfig = field(default_factory=FunctionalConfig)
    fit_window: Optional[tuple] = None
    outputs: OutputConfig = field(default_factory=OutputConfig)
    sweep: dict = field(default_factory=dict)
    warnings: tuple = field(default=(), compare=False)


# ---------------------------------------------------------------- locations


def _node_lines(text: str) -> dict:
    """Map dotted key paths to 1-based line numbers of their values."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    out: dict = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                sub = f"{path}.{k.value}" if path else str(k.value)
                out[sub] = k.start_mark.line + 1
                walk(v, sub)

    walk(root, "")
    return out


class _Ctx:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: str, msg: str) -> ConfigParseError:
        parts = path.split(".")
        line = None
        while parts and line is None:
            line = self.lines.get(".".join(parts))
            parts.pop()
        where = f"line {line}, " if line is not None else ""
        return ConfigParseError(f"{where}field '{path}': {msg}")


# ---------------------------------------------------------------- dict <-> config


def _section(doc: dict, key: str, ctx: _Ctx, allowed) -> dict:
    sec = doc.get(key) or {}
    if not isinstance(sec, dict):
        raise ctx.fail(key, f"expected a mapping, got {type(sec).__name__}")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ctx.fail(f"{key}.{sorted(map(str, unknown))[0]}", f"unknown key (allowed: {', '.join(allowed)})")
    return sec


def _number(value: Any, path: str, ctx: _Ctx, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ctx.fail(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ctx.fail(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def config_from_dict(doc: Any, lines: Optional[dict] = None, validate: bool = True) -> ExperimentConfig:
    ctx = _Ctx(lines or {})
    if doc is None:
        raise ctx.fail("<document>", "empty document")
    if not isinstance(doc, dict):
        raise ConfigParseError(f"line 1, field '<document>': expected a mapping, got {type(doc).__name__}")
    unknown = set(doc) - set(_TOP_KEYS)
    if unknown:
        raise ctx.fail(sorted(map(str, unknown))[0], f"unknown key (allowed: {', '.join(_TOP_KEYS)})")

    name = str(doc.get("name", "experiment"))
    mode = doc.get("mode", "general")
    if mode not in MODES:
        raise ctx.fail("mode", f"{mode!r} is not one of {MODES}")

    problem = _section(doc, "problem", ctx, ("parameters", "data"))
    praw = problem.get("parameters") or {}
    if not isinstance(praw, dict):
        raise ctx.fail("problem.parameters", "expected a mapping")
    bad = set(praw) - set(_PARAM_KEYS)
    if bad:
        raise ctx.fail(f"problem.parameters.{sorted(bad)[0]}", f"unknown parameter (allowed: {', '.join(_PARAM_KEYS)})")
    params = ProblemParameters(
        **{_PARAM_KEYS[k]: _number(v, f"problem.parameters.{k}", ctx) for k, v in praw.items()}
    )

    draw = problem.get("data") or {}
    if not isinstance(draw, dict):
        raise ctx.fail("problem.data", "expected a mapping")
    bad = set(draw) - set(_DATA_KEYS)
    if bad:
        raise ctx.fail(f"problem.data.{sorted(bad)[0]}", f"unknown function (allowed: {', '.join(_DATA_KEYS)})")
    fns = {}
    for k, v in draw.items():
        if v is None and k == "u0_x":
            continue
        try:
            fns[k] = as_function(v)
        except ExpressionError as exc:
            raise ctx.fail(f"problem.data.{k}", str(exc)) from None
    data = ProblemData(**fns)

    graw = _section(doc, "grid", ctx, ("N", "boundary_scheme"))
    scheme = graw.get("boundary_scheme", "half-cell")
    if scheme not in BOUNDARY_SCHEMES:
        raise ctx.fail("grid.boundary_scheme", f"{scheme!r} is not one of {sorted(BOUNDARY_SCHEMES)}")
    N = _number(graw.get("N", 10), "grid.N", ctx, integer=True)
    try:
        grid = SpatialGrid(N, scheme)
    except ValueError as exc:
        raise ctx.fail("grid.N", str(exc)) from None

    sraw = _section(doc, "solver", ctx, _SOLVER_KEYS)
    skw = {}
    for k, v in sraw.items():
        if k == "picard_mode":
            skw[k] = v
        else:
            skw[k] = _number(v, f"solver.{k}", ctx, integer=k in ("picard_max_iter", "record_every"))
    try:
        solver = SolverConfig(**skw)
    except ValueError as exc:
        raise ctx.fail("solver", str(exc)) from None

    draw2 = _section(doc, "diagnostics", ctx, _DIAG_KEYS)
    dkw = {}
    fit_window = None
    for k, v in draw2.items():
        if k == "fit_window":
            if v is not None:
                if not isinstance(v, (list, tuple)) or len(v) != 2:
                    raise ctx.fail("diagnostics.fit_window", "expected [t_start, t_end]")
                fit_window = tuple(_number(x, "diagnostics.fit_window", ctx) for x in v)
        elif v is not None:
            dkw[k] = _number(v, f"diagnostics.{k}", ctx)
    diagnostics = FunctionalConfig(**dkw)

    oraw = _section(doc, "outputs", ctx, ("dir", "formats"))
    formats = oraw.get("formats", list(FORMATS))
    if isinstance(formats, str):
        formats = [formats]
    for f in formats:
        if f not in FORMATS:
            raise ctx.fail("outputs.formats", f"{f!r} is not one of {FORMATS}")
    outputs = OutputConfig(dir=str(oraw.get("dir", "out")), formats=tuple(formats))

    sweep = doc.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ctx.fail("sweep", "expected a mapping of dotted field -> list of values")
    for k, v in sweep.items():
        if not isinstance(v, list) or not v:
            raise ctx.fail(f"sweep.{k}", "expected a non-empty list")
        _set_path(copy.deepcopy(_bare(doc)), str(k), v[0], ctx)

    cfg = ExperimentConfig(
        name=name, mode=mode, params=params, data=data, grid=grid, solver=solver,
        diagnostics=diagnostics, fit_window=fit_window, outputs=outputs,
        sweep={str(k): list(v) for k, v in sweep.items()},
    )
    return _validated(cfg) if validate else cfg


def _validated(cfg: ExperimentConfig) -> ExperimentConfig:
    """Run the hypothesis checks; failures are fatal in blowup/decay mode."""
    try:
        report = check_assumptions(cfg.params, cfg.data, cfg.mode, cfg.solver.t_final)
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from None
    failures = report.failures()
    if failures and cfg.mode in ("blowup", "decay"):
        raise ConfigValidationError(f"{cfg.mode} mode: " + "; ".join(failures), failures)
    return replace(cfg, warnings=tuple(failures) + tuple(report.notes))


def _fn_out(fn):
    return fn.to_config()


def config_to_dict(cfg: ExperimentConfig, include_outputs: bool = True) -> dict:
    p = cfg.params
    doc = {
        "name": cfg.name,
        "mode": cfg.mode,
        "problem": {
            "parameters": {k: float(getattr(p, attr)) for k, attr in _PARAM_KEYS.items()},
            "data": {k: _fn_out(getattr(cfg.data, k)) for k in _DATA_KEYS if getattr(cfg.data, k) is not None},
        },
        "grid": {"N": cfg.grid.N, "boundary_scheme": cfg.grid.boundary_scheme},
        "solver": asdict(cfg.solver),
        "diagnostics": {
            **asdict(cfg.diagnostics),
            "fit_window": list(cfg.fit_window) if cfg.fit_window is not None else None,
        },
    }
    if include_outputs:
        doc["outputs"] = {"dir": cfg.outputs.dir, "formats": list(cfg.outputs.formats)}
    if cfg.sweep:
        doc["sweep"] = {k: list(v) for k, v in cfg.sweep.items()}
    return doc


def serialize_config(cfg: ExperimentConfig, include_outputs: bool = True) -> str:
    return yaml.safe_dump(config_to_dict(cfg, include_outputs), sort_keys=True, default_flow_style=False)


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical document without the outputs section."""
    return hashlib.sha256(serialize_config(cfg, include_outputs=False).encode()).hexdigest()


def parse_config(text: str, validate: bool = True) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigParseError(f"{where}{getattr(exc, 'problem', None) or exc}") from None
    return config_from_dict(doc, _node_lines(text), validate=validate)


def load_config(path: str, validate: bool = True) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), validate=validate)


# ---------------------------------------------------------------- sweeps


def _bare(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "sweep"}


def _set_path(doc: dict, path: str, value, ctx: Optional[_Ctx] = None) -> None:
    keys = path.split(".")
    node = doc
    for k in keys[:-1]:
        if not isinstance(node.get(k, {}), dict):
            raise (ctx or _Ctx({})).fail(f"sweep.{path}", f"'{k}' is not a section")
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def expand_sweep(cfg: ExperimentConfig) -> list:
    """Cartesian product of the sweep lists, one validated config per point.

    Point names are '<name>-<k>' with k the zero-based index in product order.
    """
    if not cfg.sweep:
        return [cfg]
    base = config_to_dict(cfg)
    base.pop("sweep", None)
    keys = sorted(cfg.sweep)
    out = []
    for k, combo in enumerate(itertools.product(*(cfg.sweep[key] for key in keys))):
        doc = copy.deepcopy(base)
        for key, value in zip(keys, combo):
            _set_path(doc, key, value)
        doc["name"] = f"{cfg.name}-{k}"
        out.append(config_from_dict(doc))
    return out


# ---------------------------------------------------------------- presets


def _manufactured_doc() -> dict:
    return {
        "name": "paper-grid",
        "mode": "general",
        "problem": {
            "parameters": {
                "lambda": 1.0, "lambda0": 1.0, "lambda1": 1.0,
                "lambda_tilde0": -0.5, "lambda_tilde1": -0.5, "p": 3.0, "alpha": 4.0, "beta": 4.0,
            },
            "data": {
                "h_tilde0": "exp(3-2*t)",
                "h_tilde1": "-exp(-1-2*t)",
                "g0": "(2-e/2)*exp(-t)+2*exp(-3*t)",
                "g1": "-(1/2)*exp(-t)",
                "f": "-exp(2*x-2*t)",
                "u0": "exp(x)",
                "u1": "-exp(x)",
                "u0_x": "exp(x)",
            },
        },
        "grid": {"N": 10},
        "solver": {"dt": 0.08, "t_final": 5.0},
    }


def _homogeneous_doc(name: str, mode: str, u0: float, N: int, dt: float, t_final: float) -> dict:
    doc = _manufactured_doc()
    doc["name"], doc["mode"] = name, mode
    doc["problem"]["data"] = {
        "h_tilde0": "0", "h_tilde1": "0", "g0": "0", "g1": "0", "f": "0", "u0": repr(float(u0)), "u1": "0",
    }
    doc["grid"] = {"N": N}
    doc["solver"] = {"dt": dt, "t_final": t_final}
    return doc


PRESETS = {
    "paper-grid": _manufactured_doc,
    "blowup": lambda: _homogeneous_doc("blowup", "blowup", 5.0, 40, 0.005, 1.0),
    "decay": lambda: _homogeneous_doc("decay", "decay", 0.1, 10, 0.08, 10.0),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return config_from_dict(PRESETS[name]())
