"""Constrained recovery of structured superposition models (sparse, rotated
sparse, low rank, k-support), with empirical estimators for the geometric
quantities that govern when recovery succeeds."""

from .norms import ComponentSpec
from .solver import SolverConfig, SolverResult, SuperpositionProblem, apg_solve, solve_penalized

__all__ = [
    "ComponentSpec",
    "SolverConfig",
    "SolverResult",
    "SuperpositionProblem",
    "apg_solve",
    "solve_penalized",
]
