"""Method-of-lines semi-discretization on a uniform grid.

The unknowns are nodal displacements U_j(t) ~ u(x_j, t) and velocities
V_j = dU_j/dt at x_j = j/N.  Stacking X = (U; V), the system reads

    dX/dt = [[0, I], [A~(t), B~]] X + (0; F(t, U)),

where A~(t) is tridiagonal plus the two corner couplings (0, N) and (N, 0),
and B~ is diagonal plus the same two corners.

Boundary rows come from eliminating u_x at the endpoint with the boundary
condition.  Two variants are provided through ``SpatialGrid.boundary_scheme``:

``"half-cell"`` (default)
    the boundary node owns a cell of width dx/2, so the boundary row is
    2N^2 (U_1 - U_0) - 2N * (flux) + ...; consistent with the PDE.
``"unit-weight"``
    boundary row N^2 (U_1 - U_0) - N * (flux) + ..., i.e. weight 1 instead
    of 2.  Kept for comparison: the boundary row then tends to u_xx/2
    rather than u_xx as N grows, which caps convergence well below order 1.

Both share the storage layout and every structural invariant; the scheme
enters only as the boundary weight ``w`` (2 or 1) multiplying N^2 and N in
the two boundary rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import ProblemData, ProblemParameters

__all__ = [
    "GridTooSmallError",
    "SpatialGrid",
    "SemiDiscreteState",
    "BandedCornerMatrix",
    "SystemMatrices",
    "SemiDiscreteSystem",
    "assemble_A_tilde",
    "assemble_B_tilde",
    "assemble_system",
    "nonlinear_forcing",
    "rhs",
    "BOUNDARY_SCHEMES",
]

BOUNDARY_SCHEMES = {"half-cell": 2.0, "unit-weight": 1.0}


class GridTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialGrid:
    N: int
    boundary_scheme: str = "half-cell"

    def __post_init__(self) -> None:
        if int(self.N) != self.N:
            raise ValueError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 2:
            raise GridTooSmallError(f"N = {self.N} < 2: the two boundary stencils overlap")
        if self.boundary_scheme not in BOUNDARY_SCHEMES:
            raise ValueError(
                f"unknown boundary scheme {self.boundary_scheme!r}; choose from {sorted(BOUNDARY_SCHEMES)}"
            )

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) / self.N

    @property
    def boundary_weight(self) -> float:
        return BOUNDARY_SCHEMES[self.boundary_scheme]


@dataclass(frozen=True)
class SemiDiscreteState:
    t: float
    U: np.ndarray
    V: np.ndarray

    @property
    def X(self) -> np.ndarray:
        return np.concatenate([self.U, self.V])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.U)) and np.all(np.isfinite(self.V)))


@dataclass
class BandedCornerMatrix:
    """(n x n) matrix stored as its diagonals plus entries (0, n-1), (n-1, 0).

    ``lower``/``upper`` may be ``None`` for a diagonal-plus-corners matrix.
    """

    lower: Optional[np.ndarray]
    diag: np.ndarray
    upper: Optional[np.ndarray]
    top_right: float = 0.0
    bottom_left: float = 0.0

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        if self.upper is not None:
            out[:-1] += self.upper * v[1:]
        if self.lower is not None:
            out[1:] += self.lower * v[:-1]
        out[0] += self.top_right * v[-1]
        out[-1] += self.bottom_left * v[0]
        return out

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        n = self.n
        m = np.diag(self.diag)
        if self.upper is not None:
            m += np.diag(self.upper, 1)
        if self.lower is not None:
            m += np.diag(self.lower, -1)
        m[0, n - 1] += self.top_right
        m[n - 1, 0] += self.bottom_left
        return m

    def structure(self) -> set:
        """Index pairs of every stored entry, zero-valued or not."""
        n = self.n
        pos = {(i, i) for i in range(n)} | {(0, n - 1), (n - 1, 0)}
        if self.upper is not None:
            pos |= {(i, i + 1) for i in range(n - 1)}
        if self.lower is not None:
            pos |= {(i + 1, i) for i in range(n - 1)}
        return pos


@dataclass
class SystemMatrices:
    A_tilde: BandedCornerMatrix
    B_tilde: BandedCornerMatrix
    alpha1: float
    gamma: float

    def dense(self) -> np.ndarray:
        """Full (2N+2) x (2N+2) block matrix [[0, I], [A~, B~]]."""
        n = self.A_tilde.n
        out = np.zeros((2 * n, 2 * n))
        out[:n, n:] = np.eye(n)
        out[n:, :n] = self.A_tilde.to_dense()
        out[n:, n:] = self.B_tilde.to_dense()
        return out


def _check_grid(grid: SpatialGrid) -> None:
    if grid.N < 2:
        raise GridTooSmallError(f"N = {grid.N} < 2")


def _stencil(grid: SpatialGrid) -> tuple[float, float]:
    alpha1 = float(grid.N) ** 2
    return alpha1, -1.0 - 2.0 * alpha1


def _a_tilde_static(grid: SpatialGrid) -> BandedCornerMatrix:
    N, w = grid.N, grid.boundary_weight
    alpha1, gamma = _stencil(grid)
    diag = np.full(N + 1, gamma)
    diag[0] = diag[N] = -1.0 - w * alpha1
    upper = np.full(N, alpha1)
    lower = np.full(N, alpha1)
    upper[0] = w * alpha1
    lower[N - 1] = w * alpha1
    return BandedCornerMatrix(lower=lower, diag=diag, upper=upper)


def _corner_couplings(t: float, data: ProblemData, grid: SpatialGrid) -> tuple[float, float]:
    """(A~[0, N], A~[N, 0]) = (-wN h~1(t), -wN h~0(t))."""
    wN = grid.boundary_weight * grid.N
    return -wN * float(data.h_tilde1(t=t)), -wN * float(data.h_tilde0(t=t))


def assemble_A_tilde(
    t: float, params: ProblemParameters, data: ProblemData, grid: SpatialGrid, dense: bool = False
):
    """Displacement block of the system matrix at time ``t``."""
    _check_grid(grid)
    m = _a_tilde_static(grid)
    m.top_right, m.bottom_left = _corner_couplings(t, data, grid)
    return m.to_dense() if dense else m


def assemble_B_tilde(params: ProblemParameters, grid: SpatialGrid, dense: bool = False):
    """Velocity (damping) block of the system matrix; independent of time."""
    _check_grid(grid)
    N, w = grid.N, grid.boundary_weight
    diag = np.full(N + 1, -params.lam)
    diag[0] = -params.lam - w * N * params.lam0
    diag[N] = -params.lam - w * N * params.lam1
    m = BandedCornerMatrix(
        lower=None, diag=diag, upper=None,
        top_right=-w * N * params.lam_tilde1, bottom_left=-w * N * params.lam_tilde0,
    )
    return m.to_dense() if dense else m


def assemble_system(t: float, params: ProblemParameters, data: ProblemData, grid: SpatialGrid) -> SystemMatrices:
    alpha1, gamma = _stencil(grid)
    return SystemMatrices(
        A_tilde=assemble_A_tilde(t, params, data, grid),
        B_tilde=assemble_B_tilde(params, grid),
        alpha1=alpha1,
        gamma=gamma,
    )


def _source(t: float, data: ProblemData, grid: SpatialGrid, x: np.ndarray) -> np.ndarray:
    """U-independent part of F: f(x_j, t), with -wN g0(t), -wN g1(t) at the ends."""
    wN = grid.boundary_weight * grid.N
    s = np.array(data.f(x=x, t=t), dtype=float)
    s[0] -= wN * float(data.g0(t=t))
    s[-1] -= wN * float(data.g1(t=t))
    return s


def _nonlinear(U: np.ndarray, params: ProblemParameters, grid: SpatialGrid) -> np.ndarray:
    """U-dependent part of F: |U_j|^(p-2) U_j plus the boundary source powers."""
    wN = grid.boundary_weight * grid.N
    absU = np.abs(U)
    out = absU ** (params.p - 2.0) * U
    out[0] += wN * absU[0] ** (params.alpha - 2.0) * U[0]
    out[-1] += wN * absU[-1] ** (params.beta - 2.0) * U[-1]
    return out


def nonlinear_forcing(
    t: float, U_prev: np.ndarray, params: ProblemParameters, data: ProblemData, grid: SpatialGrid
) -> np.ndarray:
    """Forcing vector F(t, U_prev) of length N+1."""
    U_prev = np.asarray(U_prev, dtype=float)
    if U_prev.shape != (grid.N + 1,):
        raise ValueError(f"U_prev has shape {U_prev.shape}, expected ({grid.N + 1},)")
    return _nonlinear(U_prev, params, grid) + _source(t, data, grid, grid.nodes)


class SemiDiscreteSystem:
    """Bundles problem and grid; evaluates the right-hand side matrix-free.

    The static part of A~ and all of B~ are built once; only the corner
    couplings and the source are re-evaluated per time.
    """

    def __init__(self, params: ProblemParameters, data: ProblemData, grid: SpatialGrid):
        _check_grid(grid)
        self.params = params
        self.data = data
        self.grid = grid
        self.x = grid.nodes
        self._A = _a_tilde_static(grid)
        self.B = assemble_B_tilde(params, grid)

    @property
    def size(self) -> int:
        return self.grid.N + 1

    def time_terms(self, t: float) -> tuple[float, float, np.ndarray]:
        tr, bl = _corner_couplings(t, self.data, self.grid)
        return tr, bl, _source(t, self.data, self.grid, self.x)

    def A_tilde(self, t: float) -> BandedCornerMatrix:
        m = _a_tilde_static(self.grid)
        m.top_right, m.bottom_left = _corner_couplings(t, self.data, self.grid)
        return m

    def forcing(self, t: float, U_prev: np.ndarray) -> np.ndarray:
        return nonlinear_forcing(t, U_prev, self.params, self.data, self.grid)

    def acceleration(self, terms, U: np.ndarray, V: np.ndarray, U_prev: np.ndarray) -> np.ndarray:
        """A~ U + B~ V + F with the time-dependent pieces ``terms`` precomputed."""
        tr, bl, src = terms
        A = self._A
        out = A.diag * U
        out[:-1] += A.upper * U[1:]
        out[1:] += A.lower * U[:-1]
        out[0] += tr * U[-1]
        out[-1] += bl * U[0]
        out += self.B.matvec(V)
        out += _nonlinear(U_prev, self.params, self.grid)
        out += src
        return out

    def rhs(self, t: float, X: np.ndarray, U_prev_at_t: np.ndarray) -> np.ndarray:
        n = self.size
        X = np.asarray(X, dtype=float)
        if X.shape != (2 * n,):
            raise ValueError(f"X has shape {X.shape}, expected ({2 * n},)")
        U_prev_at_t = np.asarray(U_prev_at_t, dtype=float)
        if U_prev_at_t.shape != (n,):
            raise ValueError(f"U_prev has shape {U_prev_at_t.shape}, expected ({n},)")
        U, V = X[:n], X[n:]
        return np.concatenate([V, self.acceleration(self.time_terms(t), U, V, U_prev_at_t)])


def rhs(t: float, X: np.ndarray, U_prev_at_t: np.ndarray, system: SemiDiscreteSystem) -> np.ndarray:
    """Right-hand side (V; A~(t) U + B~ V + F(t, U_prev)) for X = (U; V)."""
    return system.rhs(t, X, U_prev_at_t)
