"""Constraint networks and the linear / nonlinear solvers."""

from .branch import solve_nonlinear
from .network import (ConstraintNetwork, Constraint, NumericSolution, SolveResult, check_solution,
                      classify)
from .solve import solve, solve_linear

__all__ = ["Constraint", "ConstraintNetwork", "NumericSolution", "SolveResult", "check_solution",
           "classify", "solve", "solve_linear", "solve_nonlinear"]
