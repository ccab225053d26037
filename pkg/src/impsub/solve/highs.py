"""HiGHS (via scipy) as an alternative LP relaxation engine for large instances."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .lp import EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

_STATUS = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}


def highs(lp: LinearProgram, max_iter: int | None = None) -> SolveResult:
    """Solve the continuous relaxation of ``lp`` with HiGHS dual simplex."""
    A = lp.A
    le = lp.sense == LE
    ge = lp.sense == GE
    eq = lp.sense == EQ
    ub_rows = np.flatnonzero(le | ge)
    A_ub = A[ub_rows]
    sign = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = A_ub.multiply(sign[:, None]).tocsr() if ub_rows.size else None
    b_ub = lp.rhs[ub_rows] * sign if ub_rows.size else None
    eq_rows = np.flatnonzero(eq)
    A_eq = A[eq_rows] if eq_rows.size else None
    b_eq = lp.rhs[eq_rows] if eq_rows.size else None
    bounds = np.column_stack([lp.lb, lp.ub])
    options = {"presolve": True}
    if max_iter is not None:
        options["maxiter"] = max_iter
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds", options=options)
    if res.status == 2:
        # presolve may report "infeasible or unbounded" as infeasible
        options["presolve"] = False
        res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds", options=options)
    status = _STATUS.get(res.status)
    if status is None:
        # status 4: numerical trouble; report as not solved to optimality
        return SolveResult(ITERATION_LIMIT, backend="highs", message=res.message)
    if status != OPTIMAL:
        return SolveResult(status, iterations=int(getattr(res, "nit", 0)), backend="highs", message=res.message)
    x = np.clip(res.x, lp.lb, lp.ub)
    return SolveResult(OPTIMAL, objective=lp.objective(x), x=x, iterations=int(res.nit), backend="highs")
