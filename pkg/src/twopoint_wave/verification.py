"""Manufactured-solution problem, error norms and grid-refinement studies.

The exact solution u = exp(x - t) solves the forced problem with

    lam = lam0 = lam1 = 1, lam~0 = lam~1 = -1/2, p = 3, alpha = beta = 4,
    h~0(t) = exp(3 - 2t),  h~1(t) = -exp(-1 - 2t),
    g0(t) = (2 - e/2) exp(-t) + 2 exp(-3t),  g1(t) = -exp(-t)/2,
    f(x, t) = -exp(2x - 2t),  u0 = exp(x),  u1 = -exp(x).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .diagnostics import trapezoid_weights
from .discretization import SpatialGrid
from .model import ProblemData, ProblemParameters
from .solver import SolverConfig, TrajectoryRecord, picard_solve

__all__ = [
    "ErrorReport",
    "ConvergenceRow",
    "exact_solution",
    "manufactured_problem",
    "pde_residual",
    "boundary_residuals",
    "error_norms",
    "default_dt_rule",
    "fixed_dt_rule",
    "convergence_study",
    "observed_orders",
]


def exact_solution(x, t):
    return np.exp(np.asarray(x, dtype=float) - np.asarray(t, dtype=float))


def manufactured_problem() -> tuple[ProblemParameters, ProblemData]:
    params = ProblemParameters(
        lam=1.0, lam0=1.0, lam1=1.0, lam_tilde0=-0.5, lam_tilde1=-0.5, p=3.0, alpha=4.0, beta=4.0
    )
    data = ProblemData(
        h_tilde0="exp(3-2*t)",
        h_tilde1="-exp(-1-2*t)",
        g0="(2-e/2)*exp(-t)+2*exp(-3*t)",
        g1="-(1/2)*exp(-t)",
        f="-exp(2*x-2*t)",
        u0="exp(x)",
        u1="-exp(x)",
        u0_x="exp(x)",
    )
    return params, data


def pde_residual(x, t, params: ProblemParameters, data: ProblemData):
    """u_tt - u_xx + u + lam u_t - |u|^(p-2) u - f  for u = exp(x - t)."""
    u = exact_solution(x, t)
    u_t, u_tt, u_xx = -u, u, u
    return u_tt - u_xx + u + params.lam * u_t - np.abs(u) ** (params.p - 2.0) * u - data.f(x=x, t=t)


def boundary_residuals(t, params: ProblemParameters, data: ProblemData):
    """Residuals of the two boundary conditions for u = exp(x - t)."""
    u0, u1 = exact_solution(0.0, t), exact_solution(1.0, t)
    ux0, ux1 = u0, u1
    ut0, ut1 = -u0, -u1
    r0 = ux0 + np.abs(u0) ** (params.alpha - 2.0) * u0 - (
        params.lam0 * ut0 + data.h_tilde1(t=t) * u1 + params.lam_tilde1 * ut1 + data.g0(t=t)
    )
    r1 = -ux1 + np.abs(u1) ** (params.beta - 2.0) * u1 - (
        params.lam1 * ut1 + data.h_tilde0(t=t) * u0 + params.lam_tilde0 * ut0 + data.g1(t=t)
    )
    return r0, r1


@dataclass(frozen=True)
class ErrorReport:
    max_abs: float
    l2_final: float
    per_time: tuple  # ((t, max_abs_at_t), ...)


def error_norms(trajectory: TrajectoryRecord, grid: SpatialGrid, exact: Callable = exact_solution) -> ErrorReport:
    """Nodal errors against the exact solution at every recorded snapshot."""
    if trajectory.termination.kind != "completed":
        raise ValueError(f"trajectory did not complete ({trajectory.termination.kind}); errors undefined")
    x = grid.nodes
    per_time = []
    for s in trajectory.snapshots:
        per_time.append((float(s.t), float(np.max(np.abs(s.U - exact(x, s.t))))))
    last = trajectory.snapshots[-1]
    e = last.U - exact(x, last.t)
    l2 = math.sqrt(float(trapezoid_weights(grid) @ (e * e)))
    return ErrorReport(max_abs=max(v for _, v in per_time), l2_final=l2, per_time=tuple(per_time))


def default_dt_rule(N: int) -> float:
    """Time step small enough that temporal error stays below spatial error."""
    return min(0.08, 2.0 / N**2)


def fixed_dt_rule(N: int) -> float:
    return 0.08


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    dt: float
    max_abs: float
    l2_final: float
    observed_order: Optional[float]
    status: str


def _run_row(args) -> tuple:
    N, dt, base, scheme = args
    params, data = manufactured_problem()
    grid = SpatialGrid(N, scheme)
    cfg = SolverConfig(
        dt=dt, t_final=base.t_final, picard_tol=base.picard_tol, picard_max_iter=base.picard_max_iter,
        picard_mode=base.picard_mode, blowup_threshold=base.blowup_threshold, record_every=base.record_every,
    )
    traj = picard_solve(cfg, params, data, grid)
    if traj.termination.kind != "completed":
        return N, dt, float("nan"), float("nan"), traj.termination.kind
    rep = error_norms(traj, grid)
    return N, dt, rep.max_abs, rep.l2_final, "ok"


def observed_orders(Ns, errors) -> list:
    out: list = [None]
    for (n0, e0), (n1, e1) in zip(zip(Ns, errors), zip(Ns[1:], errors[1:])):
        if e0 > 0 and e1 > 0 and np.isfinite(e0) and np.isfinite(e1):
            out.append(math.log(e0 / e1) / math.log(n1 / n0))
        else:
            out.append(None)
    return out


def convergence_study(
    N_list,
    dt_rule: Callable[[int], float] = default_dt_rule,
    solver: Optional[SolverConfig] = None,
    boundary_scheme: str = "half-cell",
    workers: int = 1,
) -> list:
    """Manufactured-problem errors per N and observed orders between rows.

    Rows whose solve does not complete carry status = termination kind and
    NaN errors.  Orders are log(e_k / e_{k+1}) / log(N_{k+1} / N_k); for
    doubling this is log2 of the error ratio.
    """
    base = solver or SolverConfig()
    for N in N_list:
        if N < 2:
            raise ValueError(f"N = {N} < 2")
    jobs = [(int(N), float(dt_rule(int(N))), base, boundary_scheme) for N in N_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_row, jobs))
    else:
        results = [_run_row(j) for j in jobs]
    orders = observed_orders([r[0] for r in results], [r[2] for r in results])
    return [
        ConvergenceRow(N=N, dt=dt, max_abs=err, l2_final=l2, observed_order=o, status=st)
        for (N, dt, err, l2, st), o in zip(results, orders)
    ]
