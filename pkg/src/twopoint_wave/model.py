"""Continuous problem definition, admissibility constants and hypothesis checks.

The problem is

    u_tt - u_xx + u + lam*u_t = |u|^(p-2) u + f(x, t),      0 < x < 1,

with the two-point boundary conditions

    u_x(0,t) + |u(0,t)|^(alpha-2) u(0,t)
        = lam0*u_t(0,t) + h~1(t) u(1,t) + lam~1*u_t(1,t) + g0(t),
   -u_x(1,t) + |u(1,t)|^(beta-2) u(1,t)
        = lam1*u_t(1,t) + h~0(t) u(0,t) + lam~0*u_t(0,t) + g1(t),

and initial data u(x,0) = u0(x), u_t(x,0) = u1(x).  With f = g0 = g1 = 0 this
is the homogeneous problem targeted by the blow-up and decay diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expressions import Expr, Function, Tabulated, as_function, zero

__all__ = [
    "AdmissibilityError",
    "SingularTransformError",
    "ProblemParameters",
    "ProblemData",
    "AssumptionReport",
    "GeneralBoundaryCoefficients",
    "CanonicalBoundary",
    "CompatibilityResult",
    "mu_star",
    "check_assumptions",
    "hellwig_transform",
    "check_compatibility",
    "half_line_cutoff",
    "half_line_l2_sq",
    "sup_norm_on",
    "CONSTANCY_SAMPLES",
    "CONSTANCY_TOL",
]

CONSTANCY_SAMPLES = 17
CONSTANCY_TOL = 1e-12
DERIVATIVE_STEP = 1e-6


class AdmissibilityError(ValueError):
    """Boundary damping violates |lam~0 + lam~1| < 2 sqrt(lam0 lam1)."""


class SingularTransformError(ValueError):
    """The general boundary system has a zero determinant."""


@dataclass(frozen=True)
class ProblemParameters:
    lam: float = 1.0
    lam0: float = 1.0
    lam1: float = 1.0
    lam_tilde0: float = 0.0
    lam_tilde1: float = 0.0
    p: float = 3.0
    alpha: float = 4.0
    beta: float = 4.0

    @property
    def q(self) -> float:
        return min(self.p, self.alpha, self.beta)

    def swapped(self) -> "ProblemParameters":
        """Mirror x -> 1 - x: exchanges the roles of the two endpoints."""
        return ProblemParameters(
            self.lam, self.lam1, self.lam0, self.lam_tilde1, self.lam_tilde0,
            self.p, self.beta, self.alpha,
        )


def _fn_field():
    return field(default_factory=zero)


@dataclass(frozen=True)
class ProblemData:
    """Coefficient, forcing and initial-data functions of one problem instance.

    ``u0_x`` is an optional exact derivative of ``u0``; it is used only by the
    compatibility check.
    """

    h_tilde0: Function = _fn_field()
    h_tilde1: Function = _fn_field()
    g0: Function = _fn_field()
    g1: Function = _fn_field()
    f: Function = _fn_field()
    u0: Function = _fn_field()
    u1: Function = _fn_field()
    u0_x: Optional[Function] = None

    def __post_init__(self) -> None:
        for name in ("h_tilde0", "h_tilde1", "g0", "g1", "f", "u0", "u1"):
            object.__setattr__(self, name, as_function(getattr(self, name)))
        if self.u0_x is not None:
            object.__setattr__(self, "u0_x", as_function(self.u0_x))

    def is_homogeneous(self, t_final: float) -> bool:
        ts = np.linspace(0.0, t_final, CONSTANCY_SAMPLES)
        xs = np.linspace(0.0, 1.0, CONSTANCY_SAMPLES)
        X, T = np.meshgrid(xs, ts)
        return (
            np.all(self.g0(t=ts) == 0.0)
            and np.all(self.g1(t=ts) == 0.0)
            and np.all(self.f(x=X, t=T) == 0.0)
        )


def mu_star(params: ProblemParameters) -> float:
    """Coercivity constant of the boundary damping quadratic form.

    For all x, y:  lam0 x^2 + lam1 y^2 + (lam~0 + lam~1) x y >= mu*/2 (x^2 + y^2).
    """
    l0, l1 = params.lam0, params.lam1
    s = params.lam_tilde0 + params.lam_tilde1
    if not (l0 > 0 and l1 > 0):
        raise AdmissibilityError(f"A2: lam0, lam1 must be positive (got {l0}, {l1})")
    if not abs(s) < 2.0 * math.sqrt(l0 * l1):
        raise AdmissibilityError(
            f"A2: |lam~0+lam~1| = {abs(s)!r} >= 2*sqrt(lam0*lam1) = {2.0 * math.sqrt(l0 * l1)!r}"
        )
    return 0.25 * (4.0 * l0 * l1 - s * s) * min(1.0 / l0, 1.0 / l1)


def half_line_cutoff(t_final: float) -> float:
    return max(10.0 * t_final, 100.0)


def _adaptive_trapezoid(fn: Callable, a: float, b: float, rtol: float = 1e-10, max_level: int = 14) -> float:
    """Composite trapezoid, halving the step until the Richardson-extrapolated
    values of two successive levels agree to ``rtol``."""
    n = 64
    xs = np.linspace(a, b, n + 1)
    ys = fn(xs)
    h = (b - a) / n
    trap = h * (ys.sum() - 0.5 * (ys[0] + ys[-1]))
    rows = [[trap]]
    for _ in range(max_level):
        mids = a + h * (np.arange(n) + 0.5)
        trap = 0.5 * trap + 0.5 * h * fn(mids).sum()
        n *= 2
        h *= 0.5
        row = [trap]
        for k, prev in enumerate(rows[-1], start=1):
            row.append(row[-1] + (row[-1] - prev) / (4.0**k - 1.0))
        if abs(row[-1] - rows[-1][-1]) <= rtol * abs(row[-1]) or row[-1] == rows[-1][-1]:
            return float(row[-1])
        rows.append(row)
    return float(rows[-1][-1])


def half_line_l2_sq(fn: Function, t_final: float) -> float:
    """Squared L2(0, inf) norm of a time function, truncated at the cutoff."""
    cutoff = half_line_cutoff(t_final)
    return _adaptive_trapezoid(lambda t: np.asarray(fn(t=t), dtype=float) ** 2, 0.0, cutoff)


def sup_norm_on(fn: Function, a: float, b: float, samples: int = 4001) -> float:
    ts = np.linspace(a, b, samples)
    return float(np.max(np.abs(fn(t=ts))))


def _is_constant(fn: Function, t_final: float) -> tuple[bool, float]:
    ts = np.linspace(0.0, t_final, CONSTANCY_SAMPLES)
    vals = np.asarray(fn(t=ts), dtype=float)
    dev = float(np.max(np.abs(vals - vals[0])))
    return dev < CONSTANCY_TOL, float(vals[0])


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the hypothesis checks for one mode.

    Flags are ``None`` when the hypothesis is not part of the mode.
    ``reasons`` maps each evaluated hypothesis to a readable explanation.
    """

    mode: str
    mu_star: Optional[float]
    q: float
    a1_ok: bool
    a2_ok: Optional[bool] = None
    a3_ok: Optional[bool] = None
    a2prime_ok: Optional[bool] = None
    a3prime_ok: Optional[bool] = None
    a3doubleprime_ok: Optional[bool] = None
    h_tilde_blowup_bound: float = float("nan")
    reasons: dict = field(default_factory=dict)
    notes: tuple = ()
    cutoff: Optional[float] = None

    def flags(self) -> dict:
        names = ("a1_ok", "a2_ok", "a3_ok", "a2prime_ok", "a3prime_ok", "a3doubleprime_ok")
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}

    def failures(self) -> list[str]:
        labels = {
            "a1_ok": "A1", "a2_ok": "A2", "a3_ok": "A3",
            "a2prime_ok": "A2'", "a3prime_ok": "A3'", "a3doubleprime_ok": "A3''",
        }
        return [f"{labels[k]}: {self.reasons[labels[k]]}" for k, v in self.flags().items() if not v]

    @property
    def ok(self) -> bool:
        return all(self.flags().values())


def _a1(params: ProblemParameters) -> tuple[bool, str]:
    bad = [
        f"{name} = {val!r} must be > {bound}"
        for name, val, bound in (
            ("p", params.p, 2), ("alpha", params.alpha, 2), ("beta", params.beta, 2), ("lambda", params.lam, 0)
        )
        if not val > bound
    ]
    return (not bad, "; ".join(bad) if bad else "p, alpha, beta > 2 and lambda > 0")


def _a2(params: ProblemParameters) -> tuple[bool, str]:
    s = params.lam_tilde0 + params.lam_tilde1
    if not (params.lam0 > 0 and params.lam1 > 0):
        return False, f"lam0 = {params.lam0!r}, lam1 = {params.lam1!r} must be positive"
    bound = 2.0 * math.sqrt(params.lam0 * params.lam1)
    if abs(s) < bound:
        return True, f"|lam~0+lam~1| = {abs(s)!r} < 2*sqrt(lam0*lam1) = {bound!r}"
    return False, f"|lam~0+lam~1| = {abs(s)!r} >= 2*sqrt(lam0*lam1) = {bound!r}"


def check_assumptions(
    params: ProblemParameters,
    data: ProblemData,
    mode: str = "general",
    t_final: float = 5.0,
) -> AssumptionReport:
    """Evaluate the hypotheses relevant to ``mode`` ('general', 'blowup', 'decay')."""
    if mode not in ("general", "blowup", "decay"):
        raise ValueError(f"unknown mode {mode!r}")
    q = params.q
    bound = (q - 2.0) / (4.0 * (q + 2.0))
    reasons: dict = {}
    notes: list = []
    a1, reasons["A1"] = _a1(params)
    a2, a2_reason = _a2(params)
    mu = mu_star(params) if a2 else None
    out: dict = {"a1_ok": a1}
    cutoff = None

    if mode in ("general", "decay"):
        out["a2_ok"] = a2
        reasons["A2"] = a2_reason

    if mode == "general":
        sups = [sup_norm_on(h, 0.0, t_final) for h in (data.h_tilde0, data.h_tilde1)]
        a3 = all(np.isfinite(s) for s in sups)
        out["a3_ok"] = a3
        reasons["A3"] = f"sup |h~0|, sup |h~1| on [0, {t_final}] = {sups[0]!r}, {sups[1]!r}"
        notes.append("A3 checked as boundedness on [0, T] only; H1(0, T) regularity is not verified")

    elif mode == "blowup":
        lt = params.lam_tilde0
        if params.lam_tilde0 != params.lam_tilde1:
            out["a2prime_ok"] = False
            reasons["A2'"] = f"lam~0 = {params.lam_tilde0!r} differs from lam~1 = {params.lam_tilde1!r}"
        elif not (params.lam0 > 0 and params.lam1 > 0):
            out["a2prime_ok"] = False
            reasons["A2'"] = "lam0, lam1 must be positive"
        else:
            ok = abs(lt) < math.sqrt(params.lam0 * params.lam1)
            out["a2prime_ok"] = ok
            reasons["A2'"] = (
                f"|lam~| = {abs(lt)!r} {'<' if ok else '>='} sqrt(lam0*lam1) = {math.sqrt(params.lam0 * params.lam1)!r}"
            )
        c0, v0 = _is_constant(data.h_tilde0, t_final)
        c1, v1 = _is_constant(data.h_tilde1, t_final)
        if not (c0 and c1):
            out["a3prime_ok"] = False
            reasons["A3'"] = f"h~0, h~1 not constant on [0, {t_final}] ({CONSTANCY_SAMPLES} samples)"
        elif abs(v0 - v1) >= CONSTANCY_TOL:
            out["a3prime_ok"] = False
            reasons["A3'"] = f"h~0 = {v0!r} differs from h~1 = {v1!r}"
        else:
            ok = abs(v0) < bound
            out["a3prime_ok"] = ok
            reasons["A3'"] = f"|h~| = {abs(v0)!r} {'<' if ok else '>='} (q-2)/(4(q+2)) = {bound!r}"

    else:
        cutoff = half_line_cutoff(t_final)
        sups = [sup_norm_on(h, 0.0, cutoff) for h in (data.h_tilde0, data.h_tilde1)]
        l2 = [half_line_l2_sq(h, t_final) for h in (data.h_tilde0, data.h_tilde1)]
        # a non-integrable h~ shows up as a tail comparable to the total
        tails = [
            _adaptive_trapezoid(lambda t, h=h: np.asarray(h(t=t), dtype=float) ** 2, 0.5 * cutoff, cutoff)
            for h in (data.h_tilde0, data.h_tilde1)
        ]
        integrable = all(tl <= 1e-3 * tot + 1e-12 for tl, tot in zip(tails, l2))
        bounded = all(np.isfinite(s) for s in sups) and all(np.isfinite(v) for v in l2)
        out["a3doubleprime_ok"] = bool(bounded and integrable)
        reasons["A3''"] = (
            f"sup |h~i| on [0, {cutoff}] = {sups[0]!r}, {sups[1]!r}; "
            f"||h~i||^2 on [0, {cutoff}] = {l2[0]!r}, {l2[1]!r}"
            + ("" if integrable else "; tail over second half of cutoff is not negligible")
        )
        notes.append(f"half-line norms truncated at T_cutoff = {cutoff}")

    return AssumptionReport(
        mode=mode, mu_star=mu, q=q, h_tilde_blowup_bound=bound,
        reasons=reasons, notes=tuple(notes), cutoff=cutoff, **out,
    )


@dataclass(frozen=True)
class GeneralBoundaryCoefficients:
    """Coefficients of the general linear two-point boundary system.

    Row i reads  a_i1 u(0) + a_i2 u_x(0) + a_i3 u_t(0)
               + b_i1 u(1) + b_i2 u_x(1) + b_i3 u_t(1) = f_i(t).
    ``alpha`` and ``beta`` are 2x3 nested tuples indexed [i][j-1].
    """

    alpha: tuple
    beta: tuple
    f0: Function = field(default_factory=zero)
    f1: Function = field(default_factory=zero)

    def __post_init__(self) -> None:
        a = tuple(tuple(float(v) for v in row) for row in self.alpha)
        b = tuple(tuple(float(v) for v in row) for row in self.beta)
        if len(a) != 2 or len(b) != 2 or any(len(r) != 3 for r in a + b):
            raise ValueError("alpha and beta must both be 2x3")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "f0", as_function(self.f0))
        object.__setattr__(self, "f1", as_function(self.f1))

    @property
    def determinant(self) -> float:
        a, b = self.alpha, self.beta
        return a[0][1] * b[1][1] - a[1][1] * b[0][1]


@dataclass(frozen=True)
class _LinearCombination:
    c0: float
    fn0: Function
    c1: float
    fn1: Function

    def __call__(self, x=0.0, t=0.0):
        return self.c0 * self.fn0(x=x, t=t) + self.c1 * self.fn1(x=x, t=t)


@dataclass(frozen=True)
class CanonicalBoundary:
    h0: float
    h1: float
    lam0: float
    lam1: float
    h_tilde0: float
    h_tilde1: float
    lam_tilde0: float
    lam_tilde1: float
    g0: Callable
    g1: Callable


def _combine(c0: float, fn0: Function, c1: float, fn1: Function):
    if isinstance(fn0, Expr) and isinstance(fn1, Expr):
        return Expr(f"({c0!r})*({fn0.text}) + ({c1!r})*({fn1.text})")
    return _LinearCombination(c0, fn0, c1, fn1)


def hellwig_transform(coeffs: GeneralBoundaryCoefficients) -> CanonicalBoundary:
    """Solve the general boundary system for u_x(0) and -u_x(1).

    The result has the flux form

        u_x(0)  = h0 u(0) + lam0 u_t(0) + h~1 u(1) + lam~1 u_t(1) + g0(t),
       -u_x(1)  = h1 u(1) + lam1 u_t(1) + h~0 u(0) + lam~0 u_t(0) + g1(t).
    """
    a, b = coeffs.alpha, coeffs.beta
    det = coeffs.determinant
    if det == 0.0:
        raise SingularTransformError("determinant a02*b12 - a12*b02 is zero")
    a01, a02, a03 = a[0]
    a11, a12, a13 = a[1]
    b01, b02, b03 = b[0]
    b11, b12, b13 = b[1]
    return CanonicalBoundary(
        h0=(b02 * a11 - b12 * a01) / det,
        h1=(a02 * b11 - a12 * b01) / det,
        lam0=(b02 * a13 - b12 * a03) / det,
        lam1=(a02 * b13 - a12 * b03) / det,
        h_tilde0=(a02 * a11 - a12 * a01) / det,
        h_tilde1=(b02 * b11 - b12 * b01) / det,
        lam_tilde0=(a02 * a13 - a12 * a03) / det,
        lam_tilde1=(b02 * b13 - b12 * b03) / det,
        g0=_combine(b12 / det, coeffs.f0, -b02 / det, coeffs.f1),
        g1=_combine(a12 / det, coeffs.f0, -a02 / det, coeffs.f1),
    )


@dataclass(frozen=True)
class CompatibilityResult:
    r0: float
    r1: float
    passed: bool
    approximate: bool


def _endpoint_derivatives(fn: Function) -> tuple[float, float]:
    h = DERIVATIVE_STEP
    d0 = (-3.0 * fn(x=0.0) + 4.0 * fn(x=h) - fn(x=2.0 * h)) / (2.0 * h)
    d1 = (3.0 * fn(x=1.0) - 4.0 * fn(x=1.0 - h) + fn(x=1.0 - 2.0 * h)) / (2.0 * h)
    return float(d0), float(d1)


def _signed_power(v: float, exponent: float) -> float:
    return abs(v) ** (exponent - 2.0) * v


def check_compatibility(params: ProblemParameters, data: ProblemData, tol: float = 1e-8) -> CompatibilityResult:
    """Residuals of the boundary conditions at t = 0 for the initial data.

    Uses ``data.u0_x`` when given, else one-sided second-order differences
    (flagged ``approximate``).  The boundary forcing g0(0), g1(0) is included;
    it vanishes for the homogeneous problem.
    """
    if data.u0_x is not None:
        d0, d1 = float(data.u0_x(x=0.0)), float(data.u0_x(x=1.0))
        approximate = False
    else:
        d0, d1 = _endpoint_derivatives(data.u0)
        approximate = True
    u0_0, u0_1 = float(data.u0(x=0.0)), float(data.u0(x=1.0))
    u1_0, u1_1 = float(data.u1(x=0.0)), float(data.u1(x=1.0))
    r0 = d0 - (
        -_signed_power(u0_0, params.alpha)
        + params.lam0 * u1_0
        + float(data.h_tilde1(t=0.0)) * u0_1
        + params.lam_tilde1 * u1_1
        + float(data.g0(t=0.0))
    )
    r1 = -d1 - (
        -_signed_power(u0_1, params.beta)
        + params.lam1 * u1_1
        + float(data.h_tilde0(t=0.0)) * u0_0
        + params.lam_tilde0 * u1_0
        + float(data.g1(t=0.0))
    )
    passed = bool(max(abs(r0), abs(r1)) <= tol)
    return CompatibilityResult(r0=r0, r1=r1, passed=passed, approximate=approximate)
