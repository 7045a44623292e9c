"""Damped nonlinear 1-D wave equation with nonlinear two-point boundary coupling.

Method-of-lines solver with Picard-linearized RK4 time stepping, energy-type
blow-up and decay diagnostics, and a manufactured-solution verification suite.
"""

from .config import ExperimentConfig, parse_config, preset, serialize_config
from .diagnostics import (
    FunctionalConfig,
    blowup_time_bound,
    decay_constants,
    evaluate_series,
    fit_exponential_decay,
    sandwich_bounds,
)
from .discretization import SpatialGrid, assemble_A_tilde, assemble_B_tilde, nonlinear_forcing
from .expressions import Expr, Tabulated
from .model import (
    GeneralBoundaryCoefficients,
    ProblemData,
    ProblemParameters,
    check_assumptions,
    check_compatibility,
    hellwig_transform,
    mu_star,
)
from .solver import SolverConfig, picard_solve, run_simulation
from .verification import convergence_study, error_norms, exact_solution, manufactured_problem

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "parse_config", "preset", "serialize_config",
    "FunctionalConfig", "blowup_time_bound", "decay_constants", "evaluate_series",
    "fit_exponential_decay", "sandwich_bounds",
    "SpatialGrid", "assemble_A_tilde", "assemble_B_tilde", "nonlinear_forcing",
    "Expr", "Tabulated",
    "GeneralBoundaryCoefficients", "ProblemData", "ProblemParameters", "check_assumptions",
    "check_compatibility", "hellwig_transform", "mu_star",
    "SolverConfig", "picard_solve", "run_simulation",
    "convergence_study", "error_norms", "exact_solution", "manufactured_problem",
]
