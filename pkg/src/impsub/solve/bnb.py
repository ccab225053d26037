"""Best-first branch and bound over LP relaxations."""

from __future__ import annotations

import heapq
import math
from typing import Callable

import numpy as np

from .lp import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

INT_TOL = 1e-6


def _relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1.0)


def _fractional_index(x: np.ndarray, int_idx: np.ndarray, tol: float) -> int:
    """Most fractional integer variable, ties to the lowest index; -1 if none."""
    xi = x[int_idx]
    frac = xi - np.floor(xi)
    score = np.minimum(frac, 1.0 - frac)
    best = int(np.argmax(score))
    if score[best] <= tol:
        return -1
    return int(int_idx[best])


def branch_and_bound(
    lp: LinearProgram,
    relax: Callable[[LinearProgram], SolveResult],
    gap: float = 1e-4,
    max_nodes: int = 100_000,
    int_tol: float = INT_TOL,
) -> SolveResult:
    """Minimise ``lp`` honouring its integrality flags.

    Nodes are explored in order of their relaxation bound (oldest first on
    ties).  Branching uses the most fractional integer variable.  The search
    stops once the incumbent is within ``gap`` (relative) of the best open
    bound.  Integer coordinates of the incumbent are rounded to the exact
    integers they lie within ``int_tol`` of, and its objective is evaluated
    at that point.
    """
    if gap < 0:
        raise ValueError("gap must be non-negative")
    int_idx = np.flatnonzero(lp.integrality)
    lb = lp.lb.copy()
    ub = lp.ub.copy()
    lb[int_idx] = np.ceil(lb[int_idx] - int_tol)
    ub[int_idx] = np.floor(ub[int_idx] + int_tol)
    if np.any(lb > ub):
        return SolveResult(INFEASIBLE, backend="bnb", nodes=0)

    nodes = 0
    iterations = 0
    incumbent = None
    inc_obj = math.inf
    heap = []
    seq = 0

    def solve_node(nlb, nub):
        nonlocal nodes, iterations
        nodes += 1
        res = relax(lp.with_bounds(nlb, nub))
        iterations += res.iterations
        return res

    root = solve_node(lb, ub)
    if root.status != OPTIMAL:
        return SolveResult(root.status, nodes=nodes, iterations=iterations, backend="bnb", message=root.message)
    heapq.heappush(heap, (root.objective, seq, lb, ub, root))

    hit_limit = False
    while heap:
        bound = heap[0][0]
        if _relative_gap(inc_obj, bound) <= gap:
            break
        if nodes >= max_nodes:
            hit_limit = True
            break
        obj, _, nlb, nub, res = heapq.heappop(heap)
        if obj >= inc_obj:
            continue
        j = _fractional_index(res.x, int_idx, int_tol)
        if j < 0:
            x = res.x.copy()
            x[int_idx] = np.round(x[int_idx])
            incumbent, inc_obj = x, lp.objective(x)
            continue
        v = res.x[j]
        down_ub = nub.copy()
        down_ub[j] = math.floor(v)
        up_lb = nlb.copy()
        up_lb[j] = math.ceil(v)
        for child_lb, child_ub in ((nlb, down_ub), (up_lb, nub)):
            if child_lb[j] > child_ub[j]:
                continue
            child = solve_node(child_lb, child_ub)
            if child.status == INFEASIBLE:
                continue
            if child.status != OPTIMAL:
                return SolveResult(child.status, nodes=nodes, iterations=iterations, backend="bnb", message=child.message)
            if child.objective < inc_obj:
                seq += 1
                heapq.heappush(heap, (child.objective, seq, child_lb, child_ub, child))

    best_bound = heap[0][0] if heap else inc_obj
    if incumbent is None:
        status = ITERATION_LIMIT if hit_limit else INFEASIBLE
        return SolveResult(status, nodes=nodes, iterations=iterations, backend="bnb")
    return SolveResult(
        ITERATION_LIMIT if hit_limit and _relative_gap(inc_obj, best_bound) > gap else OPTIMAL,
        objective=inc_obj,
        x=incumbent,
        gap=_relative_gap(inc_obj, min(best_bound, inc_obj)),
        nodes=nodes,
        iterations=iterations,
        backend="bnb",
        stats={"best_bound": min(best_bound, inc_obj)},
    )
