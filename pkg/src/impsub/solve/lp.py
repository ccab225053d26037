"""Linear / mixed-integer program container and solve result."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
STATUSES = (OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT)

LE, EQ, GE = "L", "E", "G"
_SENSE_ALIASES = {"<=": LE, "<": LE, "L": LE, "=": EQ, "==": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE}


def _readonly(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c @ x + offset`` s.t. ``A @ x (sense) rhs`` and ``lb <= x <= ub``.

    ``A`` is stored as CSR (one row per constraint).  ``sense`` holds one of
    ``"L"`` (<=), ``"E"`` (=) or ``"G"`` (>=) per row.
    """

    names: tuple
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A: sparse.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    integrality: np.ndarray = None
    row_names: tuple = None
    offset: float = 0.0

    def __post_init__(self):
        n = len(self.names)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "c", _readonly(self.c))
        object.__setattr__(self, "lb", _readonly(self.lb))
        object.__setattr__(self, "ub", _readonly(self.ub))
        integ = np.zeros(n, dtype=bool) if self.integrality is None else self.integrality
        object.__setattr__(self, "integrality", _readonly(integ, dtype=bool))
        A = sparse.csr_matrix(self.A, dtype=float)
        A.sum_duplicates()
        object.__setattr__(self, "A", A)
        sense = np.array([_SENSE_ALIASES[s] for s in self.sense], dtype="<U1")
        sense.setflags(write=False)
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "rhs", _readonly(self.rhs))
        m = self.A.shape[0]
        if self.row_names is None:
            object.__setattr__(self, "row_names", tuple(f"c{i}" for i in range(m)))
        else:
            object.__setattr__(self, "row_names", tuple(self.row_names))

        for arr, what in ((self.c, "c"), (self.lb, "lb"), (self.ub, "ub"), (self.integrality, "integrality")):
            if arr.shape != (n,):
                raise ValueError(f"{what} has shape {arr.shape}, expected ({n},)")
        if self.A.shape[1] != n:
            raise ValueError(f"A has {self.A.shape[1]} columns for {n} variables")
        if self.sense.shape != (m,) or self.rhs.shape != (m,) or len(self.row_names) != m:
            raise ValueError("sense/rhs/row_names must have one entry per constraint")
        if np.any(self.lb > self.ub):
            j = int(np.argmax(self.lb > self.ub))
            raise ValueError(f"variable {self.names[j]!r} has lb > ub")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or not np.all(np.isfinite(self.c)):
            raise ValueError("bounds must not be NaN and costs must be finite")
        if not np.all(np.isfinite(self.rhs)) or not np.all(np.isfinite(self.A.data)):
            raise ValueError("constraint data must be finite")
        if len(set(self.names)) != n:
            raise ValueError("duplicate variable names")

    @classmethod
    def from_dense(cls, c, A=None, sense=None, rhs=None, lb=None, ub=None, integrality=None, names=None):
        c = np.asarray(c, dtype=float)
        n = c.size
        A = np.zeros((0, n)) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
        m = A.shape[0]
        return cls(
            names=names or tuple(f"x{j}" for j in range(n)),
            c=c,
            lb=np.zeros(n) if lb is None else lb,
            ub=np.full(n, np.inf) if ub is None else ub,
            A=sparse.csr_matrix(A),
            sense=[LE] * m if sense is None else sense,
            rhs=np.zeros(m) if rhs is None else rhs,
            integrality=integrality,
        )

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def is_mip(self) -> bool:
        return bool(self.integrality.any())

    def objective(self, x) -> float:
        return float(self.c @ x) + self.offset

    def violation(self, x) -> float:
        """Largest absolute constraint or bound violation of ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.n_rows:
            ax = self.A @ x
            diff = ax - self.rhs
            viol = np.where(self.sense == LE, np.maximum(diff, 0.0), np.where(self.sense == GE, np.maximum(-diff, 0.0), np.abs(diff)))
            worst = float(viol.max())
        if self.n_vars:
            worst = max(worst, float(np.max(np.maximum(self.lb - x, 0.0))), float(np.max(np.maximum(x - self.ub, 0.0))))
        return worst

    def integrality_violation(self, x) -> float:
        if not self.is_mip:
            return 0.0
        xi = np.asarray(x)[self.integrality]
        return float(np.max(np.abs(xi - np.round(xi))))

    def with_bounds(self, lb, ub) -> "LinearProgram":
        return LinearProgram(self.names, self.c, lb, ub, self.A, self.sense, self.rhs, self.integrality, self.row_names, self.offset)

    def relaxation(self) -> "LinearProgram":
        return LinearProgram(self.names, self.c, self.lb, self.ub, self.A, self.sense, self.rhs, None, self.row_names, self.offset)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: str
    objective: float = float("nan")
    x: np.ndarray = None
    gap: float = 0.0
    iterations: int = 0
    nodes: int = 0
    backend: str = ""
    message: str = ""
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.x is not None:
            object.__setattr__(self, "x", _readonly(self.x))

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL
