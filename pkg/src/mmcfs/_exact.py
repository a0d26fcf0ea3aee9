"""Exact rational certification and solving for the simplex layer.

The float simplex does the searching; this module re-derives a terminal basis
in exact arithmetic, certifies primal feasibility and optimality, and, when
certification fails, falls back on a from-scratch rational Bland simplex.
Uses gmpy2.mpq when available (much faster), plain Fraction otherwise.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

try:
    from gmpy2 import mpq as _mpq

    def to_num(value: Fraction):
        return _mpq(value.numerator, value.denominator)

    def to_fraction(value) -> Fraction:
        return Fraction(int(value.numerator), int(value.denominator))

except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    def to_num(value: Fraction) -> Fraction:
        return value

    def to_fraction(value) -> Fraction:
        return Fraction(value)

_ZERO = to_num(Fraction(0))
_ONE = to_num(Fraction(1))


class ExactSolveError(Exception):
    """Exact solving/certification could not be completed."""


def solve_sparse_linear(rows: list[dict[int, object]], rhs: Sequence[object]) -> list[object] | None:
    """Solve a square sparse rational system; columns labelled 0..n-1.

    Returns None when the matrix is singular.  Gauss-Jordan with a cheap
    minimum-fill pivot heuristic; exact arithmetic throughout.
    """
    n = len(rows)
    work: list[dict[int, object]] = [{c: v for c, v in row.items() if v != 0} for row in rows]
    vec = [to_num(Fraction(0)) + v for v in rhs]
    col_rows: dict[int, set[int]] = defaultdict(set)
    for i, row in enumerate(work):
        for c in row:
            col_rows[c].add(i)
    pivot_row_of_col: dict[int, int] = {}
    remaining = set(range(n))
    while remaining:
        i = min(remaining, key=lambda k: (len(work[k]), k))
        if not work[i]:
            return None
        c = min(work[i], key=lambda cc: (len(col_rows[cc]), cc))
        piv = work[i][c]
        if piv != _ONE:
            inv = _ONE / piv
            work[i] = {cc: v * inv for cc, v in work[i].items()}
            vec[i] = vec[i] * inv
        for k in list(col_rows[c]):
            if k == i:
                continue
            factor = work[k].pop(c)
            col_rows[c].discard(k)
            if factor == 0:
                continue
            row_k = work[k]
            for cc, v in work[i].items():
                if cc == c:
                    continue
                new = row_k.get(cc, _ZERO) - factor * v
                if new == 0:
                    if cc in row_k:
                        del row_k[cc]
                        col_rows[cc].discard(k)
                else:
                    if cc not in row_k:
                        col_rows[cc].add(k)
                    row_k[cc] = new
            vec[k] = vec[k] - factor * vec[i]
        pivot_row_of_col[c] = i
        remaining.discard(i)
    if len(pivot_row_of_col) < n:
        return None
    out = [None] * n
    for c, i in pivot_row_of_col.items():
        out[c] = vec[i]
    return out


@dataclass
class ExactForm:
    """Equality standard form with exact data: columns sparse by row."""

    nrows: int
    ncols: int  # structural + slack columns
    cols: list[dict[int, object]]
    b: list[object]
    c: list[object]
    lb: list[object]
    ub: list[object | None]  # None = +inf


@dataclass
class VerifyOutcome:
    feasible: bool
    optimal: bool
    x: list[object] | None  # exact values per standard-form column
    objective: object | None


def _ext_column(form: ExactForm, j: int, art_signs) -> dict[int, object]:
    if j < form.ncols:
        return form.cols[j]
    row = j - form.ncols
    return {row: to_num(Fraction(int(art_signs[row])))}


def verify_basis(form: ExactForm, basis: Sequence[int], vstat: Sequence[int],
                 art_signs) -> VerifyOutcome:
    """Exactly re-derive the basic solution for a float-simplex terminal basis."""
    n, m = form.ncols, form.nrows
    x = [None] * n
    rhs = list(form.b)
    for j in range(n):
        if vstat[j] == 0:  # BASIC, filled below
            continue
        val = form.lb[j] if vstat[j] == 1 else form.ub[j]
        if val is None:
            return VerifyOutcome(False, False, None, None)
        x[j] = val
        if val != 0:
            for row, coeff in form.cols[j].items():
                rhs[row] = rhs[row] - coeff * val
    rows = [dict() for _ in range(m)]
    for pos, col in enumerate(basis):
        for row, coeff in _ext_column(form, int(col), art_signs).items():
            rows[row][pos] = coeff
    xb = solve_sparse_linear(rows, rhs)
    if xb is None:
        return VerifyOutcome(False, False, None, None)

    feasible = True
    for pos, col in enumerate(basis):
        col = int(col)
        if col >= n:
            if xb[pos] != 0:  # artificial must sit exactly at zero
                feasible = False
                break
            continue
        lo, hi = form.lb[col], form.ub[col]
        if xb[pos] < lo or (hi is not None and xb[pos] > hi):
            feasible = False
            break
        x[col] = xb[pos]
    if not feasible:
        return VerifyOutcome(False, False, None, None)

    # Duals: B^T y = c_B, then sign-check the nonbasic reduced costs.
    cb = [form.c[int(col)] if int(col) < n else _ZERO for col in basis]
    t_rows = [_ext_column(form, int(col), art_signs) for col in basis]
    y = solve_sparse_linear(t_rows, cb)
    if y is None:
        return VerifyOutcome(True, False, None, None)
    optimal = True
    for j in range(n):
        if vstat[j] == 0:
            continue
        if form.ub[j] is not None and form.lb[j] == form.ub[j]:
            continue  # fixed variables carry no optimality condition
        d = form.c[j]
        for row, coeff in form.cols[j].items():
            d = d - y[row] * coeff
        if vstat[j] == 1 and d < 0:
            optimal = False
            break
        if vstat[j] == 2 and d > 0:
            optimal = False
            break
    objective = None
    if optimal:
        objective = _ZERO
        for j in range(n):
            if form.c[j] != 0 and x[j] is not None:
                objective = objective + form.c[j] * x[j]
    return VerifyOutcome(True, optimal, x if optimal else None, objective)


# ---------------------------------------------------------------------------
# From-scratch rational Bland simplex (correctness backstop; small LPs only).

_EXACT_SIZE_LIMIT = 1_200_000  # rows * extended columns


def exact_solve(form: ExactForm, *, feasibility_only: bool = False,
                max_iter: int | None = None) -> tuple[str, list[object] | None, object | None]:
    m, n = form.nrows, form.ncols
    if m * (n + m) > _EXACT_SIZE_LIMIT:
        raise ExactSolveError("problem too large for rational pivoting")
    if m == 0:
        x = []
        for j in range(n):
            if form.c[j] < 0:
                if form.ub[j] is None:
                    return "unbounded", None, None
                x.append(form.ub[j])
            else:
                x.append(form.lb[j])
        obj = sum((form.c[j] * x[j] for j in range(n)), _ZERO)
        return "optimal", x, obj
    if max_iter is None:
        max_iter = 5000 + 60 * (m + n)

    total = n + m
    lb = list(form.lb) + [_ZERO] * m
    ub = list(form.ub) + [None] * m
    for j in range(n):
        if ub[j] is not None and lb[j] > ub[j]:
            return "infeasible", None, None

    rhs0 = list(form.b)
    for j in range(n):
        if lb[j] != 0:
            for row, coeff in form.cols[j].items():
                rhs0[row] = rhs0[row] - coeff * lb[j]
    signs = [1 if v >= 0 else -1 for v in rhs0]
    T = [[_ZERO] * total for _ in range(m)]
    for j in range(n):
        for row, coeff in form.cols[j].items():
            T[row][j] = coeff * signs[row]
    for i in range(m):
        T[i][n + i] = _ONE
    xB = [v if s > 0 else -v for v, s in zip(rhs0, signs)]
    basis = list(range(n, total))
    vstat = [1] * total
    for col in basis:
        vstat[col] = 0

    # Phase 1.
    d = [_ZERO] * total
    for j in range(total):
        if vstat[j] != 0:
            d[j] = -sum((T[i][j] for i in range(m)), _ZERO)
    status = _exact_pivot_loop(T, xB, basis, vstat, lb, ub, d, max_iter,
                               artificial_from=n)
    if status == "iteration-cap":
        raise ExactSolveError("rational phase 1 did not terminate in the iteration cap")
    p1 = sum((xB[i] for i in range(m) if basis[i] >= n), _ZERO)
    if p1 > 0:
        return "infeasible", None, None
    for j in range(n, total):
        ub[j] = _ZERO  # pin artificials

    if feasibility_only:
        x = _exact_point(n, m, basis, vstat, lb, ub, xB)
        return "optimal", x, _ZERO

    # Phase 2.
    c_ext = list(form.c) + [_ZERO] * m
    d = list(c_ext)
    for i in range(m):
        cb = c_ext[basis[i]]
        if cb != 0:
            row = T[i]
            for j in range(total):
                if row[j] != 0:
                    d[j] = d[j] - cb * row[j]
    for col in basis:
        d[col] = _ZERO
    status = _exact_pivot_loop(T, xB, basis, vstat, lb, ub, d, max_iter,
                               artificial_from=None)
    if status == "iteration-cap":
        raise ExactSolveError("rational phase 2 did not terminate in the iteration cap")
    if status == "unbounded":
        return "unbounded", None, None
    x = _exact_point(n, m, basis, vstat, lb, ub, xB)
    obj = sum((form.c[j] * x[j] for j in range(n) if form.c[j] != 0), _ZERO)
    return "optimal", x, obj


def _exact_point(n, m, basis, vstat, lb, ub, xB):
    x = [None] * n
    for j in range(n):
        if vstat[j] == 1:
            x[j] = lb[j]
        elif vstat[j] == 2:
            x[j] = ub[j]
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = xB[i]
    return x


def _exact_pivot_loop(T, xB, basis, vstat, lb, ub, d, max_iter, *, artificial_from):
    m = len(T)
    total = len(d)
    for _ in range(max_iter):
        enter = -1
        direction = 0
        for j in range(total):  # Bland: smallest eligible index
            if vstat[j] == 0:
                continue
            hi = ub[j]
            if hi is not None and lb[j] == hi:
                continue
            if vstat[j] == 1 and d[j] < 0:
                enter, direction = j, 1
                break
            if vstat[j] == 2 and d[j] > 0:
                enter, direction = j, -1
                break
        if enter < 0:
            return "optimal"
        j = enter

        t_best = None  # None = unbounded step
        if ub[j] is not None:
            t_best = ub[j] - lb[j]
        leave_row = -1
        for i in range(m):
            coeff = T[i][j]
            if coeff == 0:
                continue
            g = -coeff if direction > 0 else coeff
            if g > 0:
                hi = ub[basis[i]]
                if hi is None:
                    continue
                t_i = (hi - xB[i]) / g
            else:
                t_i = (xB[i] - lb[basis[i]]) / (-g)
            if t_i < 0:
                t_i = _ZERO
            if t_best is None or t_i < t_best or (t_i == t_best and leave_row >= 0
                                                  and basis[i] < basis[leave_row]):
                t_best = t_i
                leave_row = i
        if t_best is None:
            return "unbounded"

        if leave_row < 0:
            # Bound flip.
            if t_best != 0:
                for i in range(m):
                    coeff = T[i][j]
                    if coeff != 0:
                        g = -coeff if direction > 0 else coeff
                        xB[i] = xB[i] + t_best * g
            vstat[j] = 2 if direction > 0 else 1
            continue

        enter_value = (lb[j] if direction > 0 else ub[j])
        enter_value = enter_value + t_best if direction > 0 else enter_value - t_best
        if t_best != 0:
            for i in range(m):
                coeff = T[i][j]
                if coeff != 0:
                    g = -coeff if direction > 0 else coeff
                    xB[i] = xB[i] + t_best * g
        leaving = basis[leave_row]
        coeff = T[leave_row][j]
        g_leave = -coeff if direction > 0 else coeff
        vstat[leaving] = 1 if g_leave < 0 else 2
        if artificial_from is not None and leaving >= artificial_from:
            ub[leaving] = _ZERO
        piv = T[leave_row][j]
        row = T[leave_row]
        inv = _ONE / piv
        nz = [k for k in range(total) if row[k] != 0]
        for k in nz:
            row[k] = row[k] * inv
        for i in range(m):
            if i == leave_row:
                continue
            factor = T[i][j]
            if factor == 0:
                continue
            target = T[i]
            for k in nz:
                target[k] = target[k] - factor * row[k]
        factor = d[j]
        if factor != 0:
            for k in nz:
                d[k] = d[k] - factor * row[k]
        basis[leave_row] = j
        vstat[j] = 0
        xB[leave_row] = enter_value
        d[j] = _ZERO
    return "iteration-cap"
