"""LP / MILP solving: native revised simplex and branch and bound, HiGHS for scale."""

from __future__ import annotations

from functools import partial

from .bnb import branch_and_bound
from .highs import highs
from .lp import (
    EQ,
    GE,
    INFEASIBLE,
    ITERATION_LIMIT,
    LE,
    OPTIMAL,
    STATUSES,
    UNBOUNDED,
    LinearProgram,
    SolveResult,
)
from .lpformat import write_lp, format_lp
from .simplex import simplex

METHODS = ("simplex", "highs")


def _relaxation_solver(method: str, max_iter=None):
    if method == "simplex":
        return partial(simplex, max_iter=max_iter)
    if method == "highs":
        return partial(highs, max_iter=max_iter)
    raise ValueError(f"unknown LP method {method!r}; expected one of {METHODS}")


def solve_lp(lp: LinearProgram, method: str = "simplex", max_iter: int | None = None) -> SolveResult:
    """Solve ``lp`` ignoring integrality flags.

    Non-optimal outcomes are reported through ``SolveResult.status``.
    """
    return _relaxation_solver(method, max_iter)(lp.relaxation() if lp.is_mip else lp)


def solve_mip(lp: LinearProgram, gap: float = 1e-4, method: str = "simplex", max_nodes: int = 100_000) -> SolveResult:
    """Branch and bound with ``method`` solving each node relaxation."""
    if not lp.is_mip:
        return solve_lp(lp, method=method)
    return branch_and_bound(lp, _relaxation_solver(method), gap=gap, max_nodes=max_nodes)


def solve(lp: LinearProgram, method: str = "simplex", gap: float = 1e-4) -> SolveResult:
    return solve_mip(lp, gap=gap, method=method) if lp.is_mip else solve_lp(lp, method=method)


__all__ = [
    "EQ", "GE", "LE", "INFEASIBLE", "ITERATION_LIMIT", "OPTIMAL", "STATUSES", "UNBOUNDED",
    "LinearProgram", "SolveResult", "METHODS",
    "solve", "solve_lp", "solve_mip", "simplex", "highs", "branch_and_bound", "write_lp", "format_lp",
]
