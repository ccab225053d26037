"""CPLEX-LP text export.

Formatting rules (output is a pure function of the instance):

* sections in order ``Minimize``, ``Subject To``, ``Bounds``, ``Generals``
  (only if integer variables exist), ``End``; LF line endings, trailing newline;
* every number is written with Python's shortest round-trip ``repr`` of the
  float, so parsing the file recovers the instance bit for bit;
* terms are ``<coef> <name>`` joined by `` + `` / `` - `` with the sign
  pulled out of the coefficient; coefficient ``1`` is written explicitly;
* lines are wrapped before 255 characters, continuation lines start with
  three spaces;
* the objective row is named ``obj``; constraint rows use the instance's
  row names;
* bounds are omitted for the default ``0 <= x < inf``; free variables are
  written ``x free``, fixed ones ``x = v``.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .lp import EQ, GE, LE, LinearProgram

MAX_LINE = 255
_NAME_RE = re.compile(r"^[A-Za-z!\"#$%&()/,;?@_`'{}|~][A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]*$")
_SENSE_TEXT = {LE: "<=", EQ: "=", GE: ">="}


def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _check_name(name: str):
    if not _NAME_RE.match(name) or len(name) > 255:
        raise ValueError(f"name {name!r} is not valid in LP format")


def _terms(coefs, names) -> list:
    out = []
    for k, (a, name) in enumerate(zip(coefs, names)):
        sign = "-" if a < 0 else "+"
        body = f"{_num(abs(a))} {name}"
        if k == 0:
            out.append(body if sign == "+" else f"- {body}")
        else:
            out.append(f"{sign} {body}")
    return out


def _wrap(head: str, tokens: list, tail: str = "") -> list:
    lines = []
    line = head
    for tok in tokens + ([tail] if tail else []):
        if len(line) + 1 + len(tok) > MAX_LINE - 1:
            lines.append(line)
            line = "   " + tok
        else:
            line = f"{line} {tok}" if line else tok
    lines.append(line)
    return lines


def format_lp(lp: LinearProgram) -> str:
    names = lp.names
    for name in names:
        _check_name(name)
    for name in lp.row_names:
        _check_name(name)
    lines = ["\\ linear program exported by impsub", "Minimize"]
    nz = np.flatnonzero(lp.c)
    obj_terms = _terms(lp.c[nz], [names[j] for j in nz]) if nz.size else [f"0 {names[0]}"] if names else []
    if lp.offset:
        obj_terms.append(("+ " if lp.offset > 0 else "- ") + _num(abs(lp.offset)))
    lines += _wrap(" obj:", obj_terms)

    lines.append("Subject To")
    A = lp.A.tocsr()
    for i in range(lp.n_rows):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols = A.indices[lo:hi]
        order = np.argsort(cols, kind="stable")
        cols, vals = cols[order], A.data[lo:hi][order]
        terms = _terms(vals, [names[j] for j in cols]) if cols.size else [f"0 {names[0]}"]
        tail = f"{_SENSE_TEXT[lp.sense[i]]} {_num(lp.rhs[i])}"
        lines += _wrap(f" {lp.row_names[i]}:", terms, tail)

    lines.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = lp.lb[j], lp.ub[j]
        if lo == 0.0 and hi == math.inf:
            continue
        if lo == -math.inf and hi == math.inf:
            lines.append(f" {name} free")
        elif lo == hi:
            lines.append(f" {name} = {_num(lo)}")
        elif hi == math.inf:
            lines.append(f" {name} >= {_num(lo)}")
        else:
            lines.append(f" {_num(lo)} <= {name} <= {_num(hi)}")

    ints = np.flatnonzero(lp.integrality)
    if ints.size:
        lines.append("Generals")
        lines += [f" {names[j]}" for j in ints]
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(lp: LinearProgram, path) -> Path:
    path = Path(path)
    path.write_text(format_lp(lp), encoding="utf-8", newline="\n")
    return path
