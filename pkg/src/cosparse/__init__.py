"""Cosparse signal recovery by nonconvex lq-analysis minimisation."""

from .bench import CellResult, ExperimentConfig, phase_grid, preset, run_trial
from .linops import cosupport, fd2d_operator, random_tight_frame, spectrum
from .model import Problem, make_problem, relative_error
from .oracle import brute_force_lq
from .solver import SolverConfig, SolverResult, solve

__version__ = "0.1.0"

__all__ = [
    "CellResult",
    "ExperimentConfig",
    "Problem",
    "SolverConfig",
    "SolverResult",
    "brute_force_lq",
    "cosupport",
    "fd2d_operator",
    "make_problem",
    "phase_grid",
    "preset",
    "random_tight_frame",
    "relative_error",
    "run_trial",
    "solve",
    "spectrum",
]
