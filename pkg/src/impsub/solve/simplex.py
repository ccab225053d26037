"""Bounded-variable revised simplex with sparse column storage.

The constraint matrix is kept in CSC form together with one logical
(slack) column per row, so ``A x + s = b`` with the slack bounds encoding
the row sense.  The basis is factorised with SuperLU and updated between
refactorisations by a product-form eta file.  Phase one minimises the sum
of artificial variables placed only on rows whose slack cannot start
basic and feasible.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .lp import EQ, GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, UNBOUNDED, LinearProgram, SolveResult

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_LIMIT = 1000
REFACTOR_EVERY = 64


class _Basis:
    """LU factors of the basis matrix plus an eta file of rank-one updates."""

    def __init__(self, K: sparse.csc_matrix, head: np.ndarray):
        B = K[:, head].tocsc()
        self.lu = splu(B, permc_spec="COLAMD")
        self.etas = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, col in self.etas:
            wr = w[r] / col[r]
            w -= wr * col
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        v = v.copy()
        for r, col in reversed(self.etas):
            v[r] = (v[r] - (col @ v - col[r] * v[r])) / col[r]
        return self.lu.solve(v, trans="T")

    def push(self, r: int, col: np.ndarray):
        self.etas.append((r, col))


class RevisedSimplex:
    """Solve one LP; construct and call :meth:`run`."""

    def __init__(self, lp: LinearProgram, max_iter: int | None = None, bland_after: int = DEGENERATE_LIMIT):
        self.lp = lp
        self.bland_after = bland_after
        self._presolve()
        m, n = self.A.shape
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 10_000
        self.iterations = 0
        self.degenerate = 0
        self.bland = False

    # -- presolve: drop fixed columns and empty rows -------------------------

    def _presolve(self):
        lp = self.lp
        fixed = lp.lb == lp.ub
        self.keep_cols = np.flatnonzero(~fixed)
        self.x_fixed = np.where(fixed, lp.lb, 0.0)
        A = lp.A.tocsc()
        b = lp.rhs - A @ self.x_fixed
        self.offset = lp.offset + float(lp.c @ self.x_fixed)
        A = A[:, self.keep_cols]
        nnz_per_row = np.diff(A.tocsr().indptr)
        empty = nnz_per_row == 0
        self.presolve_infeasible = False
        if empty.any():
            be, se = b[empty], lp.sense[empty]
            tol = FEAS_TOL * (1.0 + np.abs(be))
            bad = ((se == LE) & (be < -tol)) | ((se == GE) & (be > tol)) | ((se == EQ) & (np.abs(be) > tol))
            self.presolve_infeasible = bool(bad.any())
        rows = np.flatnonzero(~empty)
        self.A = A.tocsr()[rows].tocsc()
        self.b = b[rows]
        self.sense = lp.sense[rows]
        self.c = lp.c[self.keep_cols]
        self.l = lp.lb[self.keep_cols]
        self.u = lp.ub[self.keep_cols]

    # -- setup -----------------------------------------------------------------

    def _initial_point(self):
        m, n = self.A.shape
        x = np.where(np.isfinite(self.l), self.l, np.where(np.isfinite(self.u), self.u, 0.0))
        res = self.b - self.A @ x
        slack_lo = np.where(self.sense == LE, 0.0, -np.inf)
        slack_hi = np.where(self.sense == GE, 0.0, np.inf)
        slack_lo[self.sense == EQ] = 0.0
        slack_hi[self.sense == EQ] = 0.0
        tiny = 1e-12 * (1.0 + np.abs(self.b))
        ok = (res >= slack_lo - tiny) & (res <= slack_hi + tiny)
        art_rows = np.flatnonzero(~ok)
        signs = np.where(res[art_rows] >= 0, 1.0, -1.0)
        n_art = art_rows.size

        art = sparse.csc_matrix((signs, (art_rows, np.arange(n_art))), shape=(m, n_art))
        self.K = sparse.hstack([self.A, sparse.identity(m, format="csc"), art], format="csc")
        self.KT = self.K.T.tocsr()
        self.n_struct = n
        self.n_art = n_art
        self.L = np.concatenate([self.l, slack_lo, np.zeros(n_art)])
        self.U = np.concatenate([self.u, slack_hi, np.full(n_art, np.inf)])
        xs = np.where(ok, np.clip(res, slack_lo, slack_hi), 0.0)
        self.x = np.concatenate([x, xs, np.abs(res[art_rows])])
        head = np.arange(n, n + m)
        head[art_rows] = n + m + np.arange(n_art)
        self.head = head
        self.is_basic = np.zeros(self.K.shape[1], dtype=bool)
        self.is_basic[head] = True
        self.b_scale = 1.0 + (np.abs(self.b).max() if m else 0.0)

    def _refactor(self):
        self.basis = _Basis(self.K, self.head)
        xn = np.where(self.is_basic, 0.0, self.x)
        self.x[self.head] = self.basis.ftran(self.b - self.K @ xn)

    # -- iteration -------------------------------------------------------------

    def _price(self, cost, allowed):
        y = self.basis.btran(cost[self.head])
        d = cost - self.KT @ y
        tol_feas = FEAS_TOL
        can_inc = self.x < self.U - tol_feas
        can_dec = self.x > self.L + tol_feas
        opt_tol = OPT_TOL * self.c_scale
        cand = allowed & ~self.is_basic & (((d < -opt_tol) & can_inc) | ((d > opt_tol) & can_dec))
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            return -1, 0.0
        if self.bland:
            q = int(idx[0])
        else:
            q = int(idx[np.argmax(np.abs(d[idx]))])
        return q, float(d[q])

    def _ratio(self, w, direction):
        head = self.head
        alpha = direction * w
        xb = self.x[head]
        lb = self.L[head]
        ub = self.U[head]
        piv = PIVOT_TOL * max(1.0, np.abs(alpha).max(initial=0.0))
        dec = (alpha > piv) & np.isfinite(lb)
        inc = (alpha < -piv) & np.isfinite(ub)
        rows = np.flatnonzero(dec | inc)
        if rows.size == 0:
            return -1, np.inf, alpha
        a = alpha[rows]
        room = np.where(a > 0, xb[rows] - lb[rows], ub[rows] - xb[rows])
        room = np.maximum(room, 0.0)
        ratios = room / np.abs(a)
        if self.bland:
            tmin = ratios.min()
            ties = rows[ratios <= tmin + 1e-12]
            r = int(ties[np.argmin(head[ties])])
            return r, float(max(tmin, 0.0)), alpha
        # Harris two-pass: relax bounds by the feasibility tolerance, then
        # prefer the largest pivot among rows inside the relaxed step.
        relaxed = (room + FEAS_TOL) / np.abs(a)
        tmax = relaxed.min()
        inside = ratios <= tmax
        cand = rows[inside]
        r = int(cand[np.argmax(np.abs(alpha[cand]))])
        k = int(np.flatnonzero(rows == r)[0])
        return r, float(ratios[k]), alpha

    def _iterate(self, cost, allowed) -> str | None:
        while True:
            if self.iterations >= self.max_iter:
                return ITERATION_LIMIT
            q, dq = self._price(cost, allowed)
            if q < 0:
                return None
            direction = 1.0 if dq < 0 else -1.0
            col = self.K.getcol(q).toarray().ravel()
            w = self.basis.ftran(col)
            r, theta, alpha = self._ratio(w, direction)
            own = self.U[q] - self.L[q]
            if r < 0 and not np.isfinite(own):
                return UNBOUNDED
            self.iterations += 1
            if own <= theta:
                # bound flip, basis unchanged
                self.x[q] += direction * own
                self.x[self.head] -= own * alpha
                self.x[q] = self.U[q] if direction > 0 else self.L[q]
                continue
            self.x[q] += direction * theta
            self.x[self.head] -= theta * alpha
            leaving = self.head[r]
            self.x[leaving] = self.L[leaving] if alpha[r] > 0 else self.U[leaving]
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.head[r] = q
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= self.bland_after:
                    self.bland = True
            if len(self.basis.etas) >= REFACTOR_EVERY:
                self._refactor()
            else:
                self.basis.push(r, w)

    def _bounds_only(self) -> SolveResult:
        c, l, u = self.c, self.l, self.u
        if np.any((c < 0) & ~np.isfinite(u)) or np.any((c > 0) & ~np.isfinite(l)):
            return SolveResult(UNBOUNDED, backend="simplex")
        xs = np.where(c > 0, l, np.where(c < 0, u, np.where(np.isfinite(l), l, np.where(np.isfinite(u), u, 0.0))))
        x = self.x_fixed.copy()
        x[self.keep_cols] = xs
        return SolveResult(OPTIMAL, objective=self.lp.objective(x), x=x, backend="simplex")

    # -- driver ----------------------------------------------------------------

    def run(self) -> SolveResult:
        lp = self.lp
        if self.presolve_infeasible:
            return SolveResult(INFEASIBLE, backend="simplex", message="empty row violated")
        if self.A.shape[0] == 0:
            return self._bounds_only()
        self._initial_point()
        ntot = self.K.shape[1]
        self.c_scale = 1.0
        self._refactor()

        if self.n_art:
            cost1 = np.zeros(ntot)
            cost1[self.n_struct + self.A.shape[0]:] = 1.0
            allowed = np.ones(ntot, dtype=bool)
            status = self._iterate(cost1, allowed)
            if status == ITERATION_LIMIT:
                return SolveResult(ITERATION_LIMIT, iterations=self.iterations, backend="simplex")
            self._refactor()
            art = self.x[self.n_struct + self.A.shape[0]:]
            if art.max(initial=0.0) > FEAS_TOL * self.b_scale:
                return SolveResult(INFEASIBLE, iterations=self.iterations, backend="simplex")

        nsl = self.n_struct + self.A.shape[0]
        self.L[nsl:] = 0.0
        self.U[nsl:] = 0.0
        cost2 = np.concatenate([self.c, np.zeros(ntot - self.n_struct)])
        self.c_scale = max(1.0, float(np.abs(self.c).max(initial=0.0)))
        allowed = np.ones(ntot, dtype=bool)
        allowed[nsl:] = False
        status = self._iterate(cost2, allowed)
        if status is not None:
            return SolveResult(status, iterations=self.iterations, backend="simplex")
        self._refactor()

        x = self.x_fixed.copy()
        x[self.keep_cols] = np.clip(self.x[: self.n_struct], self.l, self.u)
        return SolveResult(
            OPTIMAL,
            objective=lp.objective(x),
            x=x,
            iterations=self.iterations,
            backend="simplex",
            stats={"degenerate": self.degenerate, "bland": self.bland, "artificials": self.n_art},
        )


def simplex(lp: LinearProgram, max_iter: int | None = None, bland_after: int = DEGENERATE_LIMIT) -> SolveResult:
    """Solve the continuous relaxation of ``lp`` with the revised simplex."""
    return RevisedSimplex(lp, max_iter=max_iter, bland_after=bland_after).run()
