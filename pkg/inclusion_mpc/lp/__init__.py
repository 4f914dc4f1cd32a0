"""Linear programming: problem container, solvers and the trust-region subproblem."""

from inclusion_mpc.lp.program import LinearConstraint, LinearProgram, LpSolution, LpStatus
from inclusion_mpc.lp.simplex import (
    HighsSolver,
    LpSolver,
    SimplexSolver,
    get_solver,
    solve,
)
from inclusion_mpc.lp.subproblem import StageModel, Subproblem, build_subproblem

__all__ = [
    "HighsSolver",
    "LinearConstraint",
    "LinearProgram",
    "LpSolution",
    "LpSolver",
    "LpStatus",
    "SimplexSolver",
    "StageModel",
    "Subproblem",
    "build_subproblem",
    "get_solver",
    "solve",
]
