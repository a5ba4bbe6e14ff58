"""Self-contained LP/MILP kernel: model container, revised simplex with dual
prices, and branch-and-bound."""

from .model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    LE,
    MilpConstraint,
    MilpModel,
    MilpSolution,
    MilpVariable,
    ModelError,
)
from .solver import KernelNumericalError, SolverParams, backend_name, solve_lp, solve_milp

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "EQ",
    "GE",
    "LE",
    "MilpConstraint",
    "MilpModel",
    "MilpSolution",
    "MilpVariable",
    "ModelError",
    "KernelNumericalError",
    "SolverParams",
    "backend_name",
    "solve_lp",
    "solve_milp",
]
