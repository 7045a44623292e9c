"""Energy-type functionals on discrete states, decay/blow-up constants, fits.

Quadrature: composite trapezoid over the nodes for ||u||^2, ||u||_{L^p}^p,
||u'||^2 and <u, u'>; the gradient term ||u_x||^2 uses the forward
difference on each cell times the cell width.  All rules are exact for
constants and second order for smooth data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .discretization import SemiDiscreteState, SpatialGrid
from .model import (
    ProblemData,
    ProblemParameters,
    half_line_cutoff,
    half_line_l2_sq,
    mu_star,
    sup_norm_on,
)

__all__ = [
    "DiagnosticsError",
    "FunctionalConfig",
    "NormBundle",
    "FunctionalValues",
    "DecayFit",
    "DecayConstants",
    "DiagnosticsSeries",
    "trapezoid_weights",
    "discrete_norms",
    "energy_E",
    "functional_H",
    "functional_I_J",
    "functional_Phi_psi",
    "blowup_functional_L",
    "lyapunov_script_L",
    "decay_constants",
    "sandwich_bounds",
    "blowup_time_bound",
    "fit_exponential_decay",
    "evaluate_state",
    "evaluate_series",
    "max_decrease",
    "nondecreasing_within",
]


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class FunctionalConfig:
    """Constants of the blow-up and decay functionals.

    ``None`` entries take their defaults from the problem when resolved:
    eta = (p-2)/(2p), delta = min(lam, (q-2)/q)/10, epsilon1 = (1 - eta*)/2.
    """

    h_tilde: float = 0.0
    eta: Optional[float] = None
    epsilon: float = 1e-3
    delta: Optional[float] = None
    epsilon1: Optional[float] = None
    d2: Optional[float] = None
    Cp: float = math.sqrt(2.0)

    def resolved(self, params: ProblemParameters) -> "FunctionalConfig":
        q = params.q
        eta = self.eta if self.eta is not None else (params.p - 2.0) / (2.0 * params.p)
        delta = self.delta if self.delta is not None else min(params.lam, (q - 2.0) / q) / 10.0
        return replace(self, eta=eta, delta=delta)


@dataclass(frozen=True)
class NormBundle:
    l2_sq: float  # ||u||^2
    grad_sq: float  # ||u_x||^2
    lp_p: float  # ||u||_{L^p}^p
    velocity_sq: float  # ||u'||^2
    inner_uv: float  # <u, u'>
    u_left: float  # u(0)
    u_right: float  # u(1)

    @property
    def h1_sq(self) -> float:
        return self.l2_sq + self.grad_sq


def trapezoid_weights(grid: SpatialGrid) -> np.ndarray:
    w = np.full(grid.N + 1, grid.dx)
    w[0] = w[-1] = 0.5 * grid.dx
    return w


def discrete_norms(state: SemiDiscreteState, params: ProblemParameters, grid: SpatialGrid) -> NormBundle:
    U = np.asarray(state.U, dtype=float)
    V = np.asarray(state.V, dtype=float)
    w = trapezoid_weights(grid)
    slopes = np.diff(U) / grid.dx
    return NormBundle(
        l2_sq=float(w @ (U * U)),
        grad_sq=float(grid.dx * (slopes @ slopes)),
        lp_p=float(w @ np.abs(U) ** params.p),
        velocity_sq=float(w @ (V * V)),
        inner_uv=float(w @ (U * V)),
        u_left=float(U[0]),
        u_right=float(U[-1]),
    )


def _source_potential(nb: NormBundle, params: ProblemParameters) -> float:
    return (
        nb.lp_p / params.p
        + abs(nb.u_left) ** params.alpha / params.alpha
        + abs(nb.u_right) ** params.beta / params.beta
    )


def energy_E(state, params, grid, norms: Optional[NormBundle] = None) -> float:
    """E = 1/2 ||u'||^2 + 1/2 ||u||_1^2 - 1/p ||u||_p^p - 1/alpha |u(0)|^alpha - 1/beta |u(1)|^beta."""
    nb = norms or discrete_norms(state, params, grid)
    return 0.5 * nb.velocity_sq + 0.5 * nb.h1_sq - _source_potential(nb, params)


def functional_H(state, params, grid, h_tilde: float, norms: Optional[NormBundle] = None) -> float:
    nb = norms or discrete_norms(state, params, grid)
    return -energy_E(state, params, grid, nb) - h_tilde * nb.u_left * nb.u_right


def functional_I_J(state, params, grid, norms: Optional[NormBundle] = None) -> tuple[float, float]:
    """(I, J): I = ||u||_1^2 - ||u||_p^p - |u(0)|^alpha - |u(1)|^beta; J is E without kinetic energy."""
    nb = norms or discrete_norms(state, params, grid)
    I = nb.h1_sq - nb.lp_p - abs(nb.u_left) ** params.alpha - abs(nb.u_right) ** params.beta
    J = 0.5 * nb.h1_sq - _source_potential(nb, params)
    return I, J


def _psi(nb: NormBundle, params: ProblemParameters) -> float:
    return (
        nb.inner_uv
        + 0.5 * params.lam * nb.l2_sq
        + 0.5 * params.lam0 * nb.u_left**2
        + 0.5 * params.lam1 * nb.u_right**2
    )


def functional_Phi_psi(state, params, grid, norms: Optional[NormBundle] = None) -> tuple[float, float]:
    """(Phi, psi).  Phi adds lam~ u(0) u(1) to psi and needs lam~0 == lam~1."""
    if params.lam_tilde0 != params.lam_tilde1:
        raise DiagnosticsError(
            f"Phi requires lam~0 == lam~1 (got {params.lam_tilde0!r}, {params.lam_tilde1!r})"
        )
    nb = norms or discrete_norms(state, params, grid)
    psi = _psi(nb, params)
    return psi + params.lam_tilde0 * nb.u_left * nb.u_right, psi


def blowup_functional_L(state, params, grid, cfg: FunctionalConfig, norms: Optional[NormBundle] = None) -> float:
    """L = H^(1-eta) + epsilon * Phi; defined only while H > 0."""
    cfg = cfg.resolved(params)
    bound = (params.p - 2.0) / (2.0 * params.p)
    if not (0.0 <= cfg.eta <= bound):
        raise DiagnosticsError(f"eta = {cfg.eta!r} outside [0, (p-2)/(2p)] = [0, {bound!r}]")
    nb = norms or discrete_norms(state, params, grid)
    H = functional_H(state, params, grid, cfg.h_tilde, nb)
    if not H > 0:
        raise DiagnosticsError(f"H = {H!r} <= 0: blow-up functional undefined")
    Phi, _ = functional_Phi_psi(state, params, grid, nb)
    return H ** (1.0 - cfg.eta) + cfg.epsilon * Phi


def lyapunov_script_L(state, params, grid, delta: float, norms: Optional[NormBundle] = None) -> float:
    nb = norms or discrete_norms(state, params, grid)
    return energy_E(state, params, grid, nb) + delta * _psi(nb, params)


@dataclass(frozen=True)
class DecayConstants:
    q: float
    r: float
    eta_star: float
    decay_condition: bool  # eta* < 1
    mu_star: float
    h_l2_sq: tuple  # squared half-line L2 norms of h~0, h~1
    h_sup: tuple  # sup norms of h~0, h~1 on [0, cutoff]
    cutoff: float
    epsilon1: float
    delta: float
    smallness_lhs: float
    smallness_rhs: float
    smallness_ok: bool
    delta_below_lambda: bool
    boundary_bracket: float  # mu*/4 - (delta/epsilon1)(lam~0^2 + lam~1^2)


def decay_constants(
    params: ProblemParameters, data: ProblemData, E0: float, cfg: FunctionalConfig, t_final: float = 5.0
) -> DecayConstants:
    """r, eta* and the smallness checks for exponential decay."""
    q = params.q
    if not q > 2:
        raise DiagnosticsError(f"q = {q!r} must exceed 2")
    if not E0 >= 0:
        raise DiagnosticsError(f"E0 = {E0!r} must be nonnegative")
    cfg = cfg.resolved(params)
    mu = mu_star(params)
    cutoff = half_line_cutoff(t_final)
    l2 = (half_line_l2_sq(data.h_tilde0, t_final), half_line_l2_sq(data.h_tilde1, t_final))
    sup = (sup_norm_on(data.h_tilde0, 0.0, cutoff), sup_norm_on(data.h_tilde1, 0.0, cutoff))
    r = math.exp(4.0 * q / (mu * (q - 2.0)) * (l2[0] + l2[1]))
    base = 2.0 * q * r * E0 / (q - 2.0)
    eta_star = (
        cfg.Cp**params.p * base ** ((params.p - 2.0) / 2.0)
        + 2.0 ** (params.alpha / 2.0) * base ** ((params.alpha - 2.0) / 2.0)
        + 2.0 ** (params.beta / 2.0) * base ** ((params.beta - 2.0) / 2.0)
    )
    eps1 = cfg.epsilon1 if cfg.epsilon1 is not None else 0.5 * (1.0 - eta_star)
    delta = cfg.delta
    lhs = 2.0 / mu * (sup[0] ** 2 + sup[1] ** 2) + 2.0 * delta * (sup[0] + sup[1])
    rhs = delta * (1.0 - eta_star - eps1)
    return DecayConstants(
        q=q, r=r, eta_star=eta_star, decay_condition=eta_star < 1.0, mu_star=mu,
        h_l2_sq=l2, h_sup=sup, cutoff=cutoff, epsilon1=eps1, delta=delta,
        smallness_lhs=lhs, smallness_rhs=rhs, smallness_ok=lhs < rhs,
        delta_below_lambda=0.0 < delta < params.lam,
        boundary_bracket=0.25 * mu - delta / eps1 * (params.lam_tilde0**2 + params.lam_tilde1**2)
        if eps1 > 0 else float("-inf"),
    )


def sandwich_bounds(params: ProblemParameters, delta: float, q: float) -> tuple[float, float]:
    """(beta1, beta2) with beta1 E <= E + delta psi <= beta2 E while I >= 0."""
    if not q > 2:
        raise DiagnosticsError(f"q = {q!r} must exceed 2")
    if not (0.0 <= delta < 1.0 and delta < (q - 2.0) / q):
        raise DiagnosticsError(f"delta = {delta!r} must lie in [0, min(1, (q-2)/q) = {min(1.0, (q - 2.0) / q)!r})")
    beta1 = min(1.0 - delta, (q - 2.0) / q - delta)
    beta2 = 1.0 + delta + 2.0 * q / (q - 2.0) * (0.5 + delta * ((1.0 + params.lam) / 2.0 + params.lam0 + params.lam1))
    return beta1, beta2


def blowup_time_bound(eta: float, d2: float, L0: float) -> float:
    """Upper bound (1-eta)/(d2 eta) * L0^(-eta/(1-eta)) on the blow-up time."""
    if not 0.0 < eta < 1.0:
        raise DiagnosticsError(f"eta = {eta!r} must lie in (0, 1)")
    if not d2 > 0:
        raise DiagnosticsError(f"d2 = {d2!r} must be positive")
    if not L0 > 0:
        raise DiagnosticsError(f"L0 = {L0!r} must be positive")
    return (1.0 - eta) / (d2 * eta) * L0 ** (-eta / (1.0 - eta))


@dataclass(frozen=True)
class DecayFit:
    C: float
    gamma: float
    residual: float
    window: tuple


def fit_exponential_decay(times, values, window: Optional[tuple] = None) -> DecayFit:
    """Least-squares fit of ln E = ln C - gamma t over ``window`` (inclusive)."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(values, dtype=float)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    mask = (t >= window[0]) & (t <= window[1])
    t, E = t[mask], E[mask]
    if t.size < 3:
        raise DiagnosticsError(f"need at least 3 points in window {window}, got {t.size}")
    if not np.all(E > 0):
        raise DiagnosticsError("all values in the fit window must be strictly positive")
    logE = np.log(E)
    slope, intercept = np.polyfit(t, logE, 1)
    residual = float(np.max(np.abs(logE - (intercept + slope * t))))
    return DecayFit(C=float(np.exp(intercept)), gamma=float(-slope), residual=residual, window=tuple(window))


@dataclass(frozen=True)
class FunctionalValues:
    E: float
    I: float
    J: float
    psi: float
    script_L: float
    H: Optional[float] = None
    Phi: Optional[float] = None
    L_blowup: Optional[float] = None
    norms: Optional[NormBundle] = None


def evaluate_state(state, params, grid, cfg: FunctionalConfig) -> FunctionalValues:
    """All functionals at one state; blow-up ones are ``None`` where undefined."""
    cfg = cfg.resolved(params)
    nb = discrete_norms(state, params, grid)
    E = energy_E(state, params, grid, nb)
    I, J = functional_I_J(state, params, grid, nb)
    psi = _psi(nb, params)
    H = Phi = L = None
    if params.lam_tilde0 == params.lam_tilde1:
        H = functional_H(state, params, grid, cfg.h_tilde, nb)
        Phi, _ = functional_Phi_psi(state, params, grid, nb)
        if H > 0 and 0.0 <= cfg.eta <= (params.p - 2.0) / (2.0 * params.p):
            L = H ** (1.0 - cfg.eta) + cfg.epsilon * Phi
    return FunctionalValues(
        E=E, I=I, J=J, psi=psi, script_L=E + cfg.delta * psi, H=H, Phi=Phi, L_blowup=L, norms=nb
    )


SERIES_COLUMNS = ("E", "H", "I", "J", "Phi", "psi", "L", "script_L")


@dataclass
class DiagnosticsSeries:
    times: np.ndarray
    values: dict  # column name -> np.ndarray (NaN where undefined)
    constants: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.values[key]


def evaluate_series(trajectory, params, data, grid, cfg: FunctionalConfig, t_final: float = 5.0) -> DiagnosticsSeries:
    """Functionals at every snapshot plus the problem constants.

    Constants that cannot be formed (e.g. mu* when A2 fails) are omitted.
    """
    cfg = cfg.resolved(params)
    cols = {k: [] for k in SERIES_COLUMNS}
    nan = float("nan")
    for s in trajectory.snapshots:
        fv = evaluate_state(s, params, grid, cfg)
        for k, v in (
            ("E", fv.E), ("H", fv.H), ("I", fv.I), ("J", fv.J), ("Phi", fv.Phi),
            ("psi", fv.psi), ("L", fv.L_blowup), ("script_L", fv.script_L),
        ):
            cols[k].append(nan if v is None else v)
    values = {k: np.array(v, dtype=float) for k, v in cols.items()}
    constants: dict = {"q": params.q, "eta": cfg.eta, "delta": cfg.delta, "epsilon": cfg.epsilon}
    try:
        constants["mu_star"] = mu_star(params)
    except ValueError:
        pass
    if len(values["E"]) and "mu_star" in constants:
        E0 = values["E"][0]
        if E0 >= 0 and params.q > 2:
            dc = decay_constants(params, data, E0, cfg, t_final)
            constants.update(r=dc.r, eta_star=dc.eta_star, epsilon1=dc.epsilon1, cutoff=dc.cutoff)
        try:
            constants["beta1"], constants["beta2"] = sandwich_bounds(params, cfg.delta, params.q)
        except DiagnosticsError:
            pass
    return DiagnosticsSeries(times=np.asarray(trajectory.times, dtype=float), values=values, constants=constants)


def max_decrease(series) -> float:
    """Largest drop between consecutive entries (0 if nondecreasing)."""
    s = np.asarray(series, dtype=float)
    if s.size < 2:
        return 0.0
    return float(max(0.0, np.max(s[:-1] - s[1:])))


def nondecreasing_within(series, tolerances, factor: float = 10.0) -> tuple[bool, np.ndarray]:
    """Check s[k+1] >= s[k] - factor * tolerances[k] for every k.

    Returns (ok, slack) where slack[k] = s[k+1] - s[k] + factor * tolerances[k].
    """
    s = np.asarray(series, dtype=float)
    tol = np.asarray(tolerances, dtype=float)
    slack = np.diff(s) + factor * tol
    return bool(np.all(slack >= 0)), slack
