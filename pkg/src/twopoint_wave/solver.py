"""Time integration of the semi-discrete system by Picard linearization.

Iterate m solves the *linear* nonautonomous system

    dX^(m)/dt = A(t) X^(m) + F(t, U^(m-1)),     X^(m)(0) = X0,

with the nonlinear forcing frozen at the previous iterate.  Each linear solve
uses the classical fixed-step RK4 method; the frozen forcing at an RK4 stage
is evaluated on the previous iterate's displacement *at that same stage*, so
the fixed point of the recursion is exactly RK4 applied to the nonlinear
system.

Two modes:

``per_step``
    the recursion runs inside each time step, iterate 0 being the step's
    start value held constant.  Within one step the stage dependencies are
    nilpotent, so the recursion is exact after at most three iterations.
``global``
    the recursion runs over the whole horizon [0, t_final], iterate 0 being
    the constant extension of X0.  A sweep whose state exceeds the blow-up
    threshold stops there; the next sweep continues past that point using the
    last available stage value held constant.  The recursion has converged
    when two successive sweeps agree to ``picard_tol`` over the same span.

The step count is ceil(t_final/dt); if dt does not divide t_final the final
step is shortened to land on t_final exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import SemiDiscreteState, SemiDiscreteSystem, SpatialGrid
from .model import ProblemData, ProblemParameters

__all__ = [
    "SolverConfig",
    "Termination",
    "BlowupEvent",
    "TrajectoryRecord",
    "rk4_step",
    "time_grid",
    "picard_solve",
    "detect_blowup",
    "run_simulation",
    "step_doubling_estimates",
]


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.08
    t_final: float = 5.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 500
    picard_mode: str = "per_step"
    blowup_threshold: float = 1e8
    record_every: int = 1

    def __post_init__(self) -> None:
        problems = []
        if not self.dt > 0:
            problems.append(f"dt = {self.dt!r} must be > 0")
        if not self.t_final > 0:
            problems.append(f"t_final = {self.t_final!r} must be > 0")
        if not self.picard_tol > 0:
            problems.append(f"picard_tol = {self.picard_tol!r} must be > 0")
        if int(self.picard_max_iter) != self.picard_max_iter or self.picard_max_iter < 1:
            problems.append(f"picard_max_iter = {self.picard_max_iter!r} must be an integer >= 1")
        if self.picard_mode not in ("per_step", "global"):
            problems.append(f"picard_mode = {self.picard_mode!r} must be 'per_step' or 'global'")
        if not self.blowup_threshold > 0:
            problems.append(f"blowup_threshold = {self.blowup_threshold!r} must be > 0")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            problems.append(f"record_every = {self.record_every!r} must be an integer >= 1")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class Termination:
    kind: str  # "completed" | "blowup_detected" | "picard_failure"
    t: Optional[float] = None
    magnitude: Optional[float] = None

    @property
    def completed(self) -> bool:
        return self.kind == "completed"


@dataclass(frozen=True)
class BlowupEvent:
    t: float
    magnitude: float


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    snapshots: list
    picard_iterations: list
    termination: Termination
    picard_differences: list = field(default_factory=list)

    @property
    def U(self) -> np.ndarray:
        return np.array([s.U for s in self.snapshots])

    @property
    def V(self) -> np.ndarray:
        return np.array([s.V for s in self.snapshots])


def _rk4(t: float, X: np.ndarray, dt: float, field_: Callable) -> tuple[np.ndarray, list]:
    """One classical RK4 step; ``field_(stage, t, X)``.  Returns (X_new, stage inputs)."""
    k1 = field_(0, t, X)
    X2 = X + 0.5 * dt * k1
    k2 = field_(1, t + 0.5 * dt, X2)
    X3 = X + 0.5 * dt * k2
    k3 = field_(2, t + 0.5 * dt, X3)
    X4 = X + dt * k3
    k4 = field_(3, t + dt, X4)
    return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), [X, X2, X3, X4]


def rk4_step(t: float, X, dt: float, rhs_fn: Callable) -> np.ndarray:
    """Classical fourth-order Runge-Kutta update of dX/dt = rhs_fn(t, X).

    Non-finite values are not trapped here; they propagate to the caller.
    """
    if not dt > 0:
        raise ValueError(f"dt = {dt!r} must be > 0")
    X = np.asarray(X, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out, _ = _rk4(t, X, dt, lambda stage, s, Y: np.asarray(rhs_fn(s, Y), dtype=float))
    return out


def time_grid(dt: float, t_final: float) -> np.ndarray:
    n = max(1, math.ceil(t_final / dt - 1e-9))
    times = np.arange(n + 1) * dt
    times[-1] = t_final
    return times


def detect_blowup(state: SemiDiscreteState, threshold: float) -> Optional[BlowupEvent]:
    """Event if sup|U| exceeds ``threshold`` or any entry is non-finite."""
    U = np.asarray(state.U)
    finite = np.all(np.isfinite(U)) and np.all(np.isfinite(np.asarray(state.V)))
    mag = float(np.max(np.abs(U))) if np.all(np.isfinite(U)) else float("inf")
    if not finite or mag > threshold:
        return BlowupEvent(t=float(state.t), magnitude=mag)
    return None


class _Stepper:
    """RK4 step of the linear system with forcing frozen per stage."""

    def __init__(self, system: SemiDiscreteSystem):
        self.system = system
        self.n = system.size

    def stage_terms(self, t: float, h: float) -> list:
        mid = self.system.time_terms(t + 0.5 * h)
        return [self.system.time_terms(t), mid, mid, self.system.time_terms(t + h)]

    def step(self, t: float, h: float, X: np.ndarray, frozen: np.ndarray, terms: list):
        n, sys_ = self.n, self.system

        def field_(stage, s, Y):
            U, V = Y[:n], Y[n:]
            return np.concatenate([V, sys_.acceleration(terms[stage], U, V, frozen[stage])])

        X_new, stages = _rk4(t, X, h, field_)
        return X_new, np.array([Y[:n] for Y in stages])


def _exceeds(X: np.ndarray, stage_U: np.ndarray, n: int, threshold: float) -> bool:
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(stage_U))):
        return True
    return bool(np.max(np.abs(X[:n])) > threshold)


def _state(t: float, X: np.ndarray, n: int) -> SemiDiscreteState:
    return SemiDiscreteState(t=float(t), U=X[:n].copy(), V=X[n:].copy())


def _initial_vector(data: ProblemData, grid: SpatialGrid) -> np.ndarray:
    x = grid.nodes
    return np.concatenate([np.asarray(data.u0(x=x), dtype=float), np.asarray(data.u1(x=x), dtype=float)])


def _blowup_termination(t: float, X: np.ndarray, n: int) -> Termination:
    U = X[:n]
    mag = float(np.max(np.abs(U))) if np.all(np.isfinite(U)) else float("inf")
    return Termination("blowup_detected", t=float(t), magnitude=mag)


def _solve_per_step(config, stepper, X0, times):
    n = stepper.n
    record = [0]
    states = [X0]
    iterations = []
    differences = []
    X = X0
    termination = Termination("completed", t=float(times[-1]))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(len(times) - 1):
            t, h = times[k], times[k + 1] - times[k]
            terms = stepper.stage_terms(t, h)
            frozen = np.tile(X[:n], (4, 1))
            prev_X = X
            converged = False
            step_diffs = []
            for sweep in range(1, config.picard_max_iter + 1):
                X_new, stage_U = stepper.step(t, h, X, frozen, terms)
                if _exceeds(X_new, stage_U, n, config.blowup_threshold):
                    termination = _blowup_termination(times[k + 1], X_new, n)
                    break
                diff = float(max(np.max(np.abs(X_new - prev_X)), np.max(np.abs(stage_U - frozen))))
                step_diffs.append(diff)
                if diff <= config.picard_tol:
                    converged = True
                    break
                prev_X, frozen = X_new, stage_U
            if termination.kind == "blowup_detected":
                break
            if not converged:
                termination = Termination("picard_failure", t=float(t))
                break
            iterations.append(sweep - 1)
            differences.append(step_diffs)
            X = X_new
            states.append(X)
            record.append(k + 1)
    return states, record, iterations, termination, differences


def _global_sweep(stepper, X0, times, terms, prev_stages, prev_len, threshold):
    n = stepper.n
    steps = len(times) - 1
    states = [X0]
    stages = np.empty((steps, 4, n))
    X = X0
    hold = prev_stages[prev_len - 1, 3] if prev_len > 0 else X0[:n]
    for k in range(steps):
        t, h = times[k], times[k + 1] - times[k]
        frozen = prev_stages[k] if k < prev_len else np.tile(hold, (4, 1))
        X_new, stage_U = stepper.step(t, h, X, frozen, terms[k])
        stages[k] = stage_U
        if _exceeds(X_new, stage_U, n, threshold):
            return states, stages, k, X_new
        X = X_new
        states.append(X)
    return states, stages, steps, None


def _solve_global(config, stepper, X0, times):
    n = stepper.n
    steps = len(times) - 1
    terms = [stepper.stage_terms(times[k], times[k + 1] - times[k]) for k in range(steps)]
    prev_stages = np.tile(X0[:n], (steps, 4, 1))
    prev_len = steps
    prev_states = [X0] * (steps + 1)
    diffs = []
    with np.errstate(over="ignore", invalid="ignore"):
        for sweep in range(1, config.picard_max_iter + 1):
            states, stages, length, bad = _global_sweep(
                stepper, X0, times, terms, prev_stages, prev_len, config.blowup_threshold
            )
            common = min(len(states), len(prev_states))
            d_states = np.max(np.abs(np.array(states[:common]) - np.array(prev_states[:common])))
            c_st = min(length, prev_len)
            d_stages = np.max(np.abs(stages[:c_st] - prev_stages[:c_st])) if c_st else 0.0
            diff = float(max(d_states, d_stages))
            diffs.append(diff)
            if diff <= config.picard_tol and length == prev_len:
                if bad is not None:
                    term = _blowup_termination(times[length + 1], bad, n)
                else:
                    term = Termination("completed", t=float(times[-1]))
                return states, list(range(len(states))), [sweep - 1], term, [diffs]
            prev_stages, prev_len, prev_states = stages, length, states
    # earliest recorded time at which the last two sweeps still disagree
    common = min(len(states), len(prev_states))
    gaps = np.max(np.abs(np.array(states[:common]) - np.array(prev_states[:common])), axis=1)
    bad_idx = int(np.argmax(gaps > config.picard_tol)) if np.any(gaps > config.picard_tol) else common - 1
    return [X0], [0], [config.picard_max_iter], Termination("picard_failure", t=float(times[bad_idx])), [diffs]


def picard_solve(
    config: SolverConfig, params: ProblemParameters, data: ProblemData, grid: SpatialGrid
) -> TrajectoryRecord:
    """Integrate the semi-discrete system over [0, t_final].

    ``picard_iterations`` holds, per step (per_step) or once (global), the
    index of the converged iterate; the sweep that confirms convergence is
    not counted.  ``picard_differences`` holds the sup-norm change of every
    sweep, one list per step (per_step) or a single list (global).  The last stored snapshot is always the last finite state.
    """
    system = SemiDiscreteSystem(params, data, grid)
    stepper = _Stepper(system)
    n = stepper.n
    X0 = _initial_vector(data, grid)
    times = time_grid(config.dt, config.t_final)
    if _exceeds(X0, X0[None, :n], n, config.blowup_threshold):
        return TrajectoryRecord(
            times=np.array([0.0]), snapshots=[_state(0.0, X0, n)], picard_iterations=[],
            termination=_blowup_termination(0.0, X0, n),
        )
    if config.picard_mode == "per_step":
        states, idx, iters, term, diffs = _solve_per_step(config, stepper, X0, times)
    else:
        states, idx, iters, term, diffs = _solve_global(config, stepper, X0, times)

    keep = [j for j in range(len(states)) if idx[j] % config.record_every == 0]
    if keep[-1] != len(states) - 1:
        keep.append(len(states) - 1)
    rec_times = np.array([times[idx[j]] for j in keep])
    snaps = [_state(times[idx[j]], states[j], n) for j in keep]
    return TrajectoryRecord(
        times=rec_times, snapshots=snaps, picard_iterations=iters, termination=term,
        picard_differences=diffs,
    )


def run_simulation(config, params, data, grid, diagnostics_config=None):
    """Solve, then evaluate the diagnostic functionals on every snapshot."""
    from .diagnostics import FunctionalConfig, evaluate_series

    trajectory = picard_solve(config, params, data, grid)
    cfg = diagnostics_config if diagnostics_config is not None else FunctionalConfig()
    series = evaluate_series(trajectory, params, data, grid, cfg, t_final=config.t_final)
    return trajectory, series


def step_doubling_estimates(trajectory: TrajectoryRecord, params, data, grid, functional: Callable) -> np.ndarray:
    """Local time-error estimate of ``functional(state)`` for each recorded step.

    From snapshot k, one RK4 step to snapshot k+1 is compared with two half
    steps; entry k is |functional(one step) - functional(two half steps)|.
    Requires consecutive snapshots to be single time steps (record_every=1).
    """
    system = SemiDiscreteSystem(params, data, grid)
    n = system.size

    def field_(t, X):
        return system.rhs(t, X, X[:n])

    out = []
    with np.errstate(over="ignore", invalid="ignore"):
        for a, b in zip(trajectory.snapshots[:-1], trajectory.snapshots[1:]):
            h = b.t - a.t
            full = rk4_step(a.t, a.X, h, field_)
            half = rk4_step(a.t + 0.5 * h, rk4_step(a.t, a.X, 0.5 * h, field_), 0.5 * h, field_)
            f_full = functional(_state(b.t, full, n))
            f_half = functional(_state(b.t, half, n))
            est = abs(f_full - f_half)
            out.append(est if np.isfinite(est) else np.inf)
    return np.array(out)
