"""Linear programs with a basic-solution guarantee.

`solve_basic` always returns extreme-point optima: small programs go through
the in-package bounded-variable primal simplex (Bland anti-cycling), large
ones are delegated to HiGHS in its dual-simplex mode, whose terminal points
are basic by construction.  An exact-rational mode re-derives the float
terminal basis with rational arithmetic, certifies feasibility + optimality,
and falls back on a from-scratch rational Bland simplex if the certificate
fails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import _exact, _simplex
from ._exact import ExactForm, to_fraction, to_num
from .graph import ValidationError

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9  # absolute constraint-violation tolerance
OBJ_TOL = 1e-9  # relative objective reproducibility tolerance
MARGINAL_BAND = 1e-6  # phase-1 values below this are re-checked exactly
DENSE_LIMIT = 600_000  # tableau cells above which HiGHS takes over

RELATIONS = ("<=", "=", ">=")


class LpNumericalError(RuntimeError):
    """The solver could not produce or certify a solution."""


@dataclass(frozen=True)
class Variable:
    name: str
    lb: Fraction
    ub: Fraction | None  # None = +inf


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, Fraction], ...]
    relation: str
    rhs: Fraction


@dataclass(frozen=True)
class LinearProgram:
    variables: tuple[Variable, ...]
    objective: tuple[tuple[int, Fraction], ...]
    constraints: tuple[Constraint, ...]

    def __post_init__(self) -> None:
        nv = len(self.variables)
        for var in self.variables:
            if var.ub is not None and var.lb > var.ub:
                raise ValidationError(f"variable {var.name}: lower bound exceeds upper bound")
        for idx, _ in self.objective:
            if not 0 <= idx < nv:
                raise ValidationError(f"objective references unknown variable {idx}")
        for row, con in enumerate(self.constraints):
            if con.relation not in RELATIONS:
                raise ValidationError(f"constraint {row}: bad relation {con.relation!r}")
            for idx, _ in con.coeffs:
                if not 0 <= idx < nv:
                    raise ValidationError(f"constraint {row} references unknown variable {idx}")

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def nrows(self) -> int:
        return len(self.constraints)

    def to_debug_text(self) -> str:
        """Fixed-width MPS-like dump for cross-checking against external solvers."""
        lines = ["NAME          MMCFS_LP", "ROWS", " N  COST"]
        tag = {"<=": " L ", "=": " E ", ">=": " G "}
        for i, con in enumerate(self.constraints):
            lines.append(f"{tag[con.relation]} R{i:07d}")
        lines.append("COLUMNS")
        obj = dict(self.objective)
        by_var: dict[int, list[tuple[str, Fraction]]] = {i: [] for i in range(self.nvars)}
        for i, con in enumerate(self.constraints):
            for idx, coeff in con.coeffs:
                by_var[idx].append((f"R{i:07d}", coeff))
        for idx, var in enumerate(self.variables):
            entries = by_var[idx]
            if idx in obj:
                entries = [("COST", obj[idx])] + entries
            for row_name, coeff in entries:
                lines.append(f"    {var.name:<12}{row_name:<10}{float(coeff):> .12e}")
        lines.append("RHS")
        for i, con in enumerate(self.constraints):
            if con.rhs != 0:
                lines.append(f"    RHS         R{i:07d}  {float(con.rhs):> .12e}")
        lines.append("BOUNDS")
        for var in self.variables:
            lines.append(f" LO BND         {var.name:<12}{float(var.lb):> .12e}")
            if var.ub is not None:
                lines.append(f" UP BND         {var.name:<12}{float(var.ub):> .12e}")
        lines.append("ENDATA")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: dict[str, Fraction | float]
    objective_value: Fraction | float
    is_basic: bool
    exact: bool
    marginal: bool = False
    solver: str = "dense-simplex"


class LpBuilder:
    """Incremental construction helper for LinearProgram objects."""

    def __init__(self) -> None:
        self._vars: list[Variable] = []
        self._objective: dict[int, Fraction] = {}
        self._constraints: list[Constraint] = []
        self._index: dict[str, int] = {}

    def add_var(self, name: str, lb: Fraction | int = 0, ub: Fraction | int | None = None) -> int:
        if name in self._index:
            raise ValidationError(f"duplicate variable name {name!r}")
        idx = len(self._vars)
        self._vars.append(Variable(name, Fraction(lb), None if ub is None else Fraction(ub)))
        self._index[name] = idx
        return idx

    def set_objective_coeff(self, idx: int, coeff: Fraction | int) -> None:
        coeff = Fraction(coeff)
        if coeff:
            self._objective[idx] = coeff

    def add_constraint(self, coeffs: Mapping[int, Fraction | int], relation: str,
                       rhs: Fraction | int) -> None:
        row = tuple(sorted((i, Fraction(c)) for i, c in coeffs.items() if Fraction(c) != 0))
        self._constraints.append(Constraint(row, relation, Fraction(rhs)))

    def build(self) -> LinearProgram:
        return LinearProgram(
            variables=tuple(self._vars),
            objective=tuple(sorted(self._objective.items())),
            constraints=tuple(self._constraints),
        )


# ---------------------------------------------------------------------------
# standard form


@dataclass
class _Forms:
    exact: ExactForm
    structural: int  # leading columns holding the LP's own variables


def _standard_form(lp: LinearProgram) -> _Forms:
    nv = lp.nvars
    cols: list[dict[int, object]] = [dict() for _ in range(nv)]
    b: list[object] = []
    lb = [to_num(v.lb) for v in lp.variables]
    ub: list[object | None] = [None if v.ub is None else to_num(v.ub) for v in lp.variables]
    c = [to_num(Fraction(0))] * nv
    for idx, coeff in lp.objective:
        c[idx] = to_num(coeff)
    slack_cols: list[dict[int, object]] = []
    for row, con in enumerate(lp.constraints):
        flip = -1 if con.relation == ">=" else 1
        for idx, coeff in con.coeffs:
            cols[idx][row] = to_num(coeff * flip)
        b.append(to_num(con.rhs * flip))
        if con.relation != "=":
            slack_cols.append({row: to_num(Fraction(1))})
    for col in slack_cols:
        cols.append(col)
        lb.append(to_num(Fraction(0)))
        ub.append(None)
        c.append(to_num(Fraction(0)))
    form = ExactForm(nrows=lp.nrows, ncols=len(cols), cols=cols, b=b, c=c, lb=lb, ub=ub)
    return _Forms(exact=form, structural=nv)


def _float_arrays(form: ExactForm):
    m, n = form.nrows, form.ncols
    A = np.zeros((m, n))
    for j, col in enumerate(form.cols):
        for row, coeff in col.items():
            A[row, j] = float(coeff)
    b = np.array([float(v) for v in form.b])
    c = np.array([float(v) for v in form.c])
    lb = np.array([float(v) for v in form.lb])
    ub = np.array([np.inf if v is None else float(v) for v in form.ub])
    return A, b, c, lb, ub


def _dense_cells(lp: LinearProgram) -> int:
    ncols = lp.nvars + sum(1 for con in lp.constraints if con.relation != "=")
    return lp.nrows * (ncols + lp.nrows)


# ---------------------------------------------------------------------------
# HiGHS delegation


def _solve_highs(lp: LinearProgram, feasibility_only: bool) -> LpSolution:
    from scipy import sparse
    from scipy.optimize import linprog

    nv = lp.nvars
    c = np.zeros(nv)
    if not feasibility_only:
        for idx, coeff in lp.objective:
            c[idx] = float(coeff)
    ub_rows: list[tuple[Iterable[tuple[int, Fraction]], float]] = []
    eq_rows: list[tuple[Iterable[tuple[int, Fraction]], float]] = []
    for con in lp.constraints:
        if con.relation == "=":
            eq_rows.append((con.coeffs, float(con.rhs)))
        elif con.relation == "<=":
            ub_rows.append((con.coeffs, float(con.rhs)))
        else:
            ub_rows.append((tuple((i, -v) for i, v in con.coeffs), float(-con.rhs)))

    def build(rows):
        if not rows:
            return None, None
        data, ri, ci, rhs = [], [], [], []
        for r, (coeffs, bval) in enumerate(rows):
            rhs.append(bval)
            for idx, coeff in coeffs:
                ri.append(r)
                ci.append(idx)
                data.append(float(coeff))
        mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), nv))
        return mat, np.array(rhs)

    A_ub, b_ub = build(ub_rows)
    A_eq, b_eq = build(eq_rows)
    bounds = [(float(v.lb), None if v.ub is None else float(v.ub)) for v in lp.variables]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds")
    if res.status == 2:
        return LpSolution("infeasible", {}, 0.0, False, False, solver="highs-ds")
    if res.status == 3:
        return LpSolution("unbounded", {}, -np.inf, False, False, solver="highs-ds")
    if res.status != 0:
        raise LpNumericalError(f"HiGHS failed: {res.message}")
    values = {var.name: float(res.x[i]) for i, var in enumerate(lp.variables)}
    # Dual simplex terminates on a basis, so the point is a polyhedron vertex.
    return LpSolution("optimal", values, float(res.fun), True, False, solver="highs-ds")


# ---------------------------------------------------------------------------
# public entry points


def solve_basic(lp: LinearProgram, *, mode: str = "float",
                feas_tol: float = FEAS_TOL) -> LpSolution:
    """Minimise the LP, returning a basic (extreme-point) optimum.

    mode="float": double precision (dense simplex or HiGHS by size).
    mode="exact": rational values, certified optimal in exact arithmetic.
    mode="auto":  float solve plus an opportunistic exact certification.
    """
    if mode not in ("float", "exact", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    if _dense_cells(lp) > DENSE_LIMIT:
        if mode in ("float", "auto"):
            return _solve_highs(lp, feasibility_only=False)
        raise LpNumericalError("program too large for the exact-rational mode")

    forms = _standard_form(lp)
    A, b, c, lb, ub = _float_arrays(forms.exact)
    try:
        res = _simplex.solve_standard_form(A, b, c, lb, ub, tol=feas_tol)
    except _simplex.SimplexFailure as exc:
        if mode == "float":
            raise LpNumericalError(str(exc)) from exc
        return _exact_from_scratch(lp, forms)
    if res.status == "infeasible":
        if res.phase1_objective <= MARGINAL_BAND or mode in ("exact",):
            confirmed = _exact_feasibility(forms)
            if confirmed is not None:
                if confirmed:
                    return _exact_from_scratch(lp, forms)
                return LpSolution("infeasible", {}, 0.0, False, True)
        return LpSolution("infeasible", {}, 0.0, False, False,
                          marginal=res.phase1_objective <= MARGINAL_BAND)
    if res.status == "unbounded":
        return LpSolution("unbounded", {}, -np.inf, False, False)

    if mode in ("exact", "auto"):
        outcome = _exact.verify_basis(forms.exact, res.basis, _full_vstat(res, forms.exact),
                                      res.art_signs)
        if outcome.feasible and outcome.optimal:
            values = {var.name: to_fraction(outcome.x[i]) for i, var in enumerate(lp.variables)}
            return LpSolution("optimal", values, to_fraction(outcome.objective),
                              True, True, solver="dense-simplex+rational-certificate")
        if mode == "exact":
            logger.info("float basis failed exact certification; rational re-solve")
            return _exact_from_scratch(lp, forms)

    if res.residual > max(feas_tol, 1e-7):
        raise LpNumericalError(f"terminal residual too large: {res.residual:g}")
    values = {var.name: float(res.x[i]) for i, var in enumerate(lp.variables)}
    return LpSolution("optimal", values, float(res.objective), True, False)


def check_feasible(lp: LinearProgram, *, feas_tol: float = FEAS_TOL) -> bool:
    """Phase-1 feasibility; near-boundary float verdicts are re-checked exactly."""
    if _dense_cells(lp) > DENSE_LIMIT:
        return _solve_highs(lp, feasibility_only=True).status == "optimal"
    forms = _standard_form(lp)
    A, b, c, lb, ub = _float_arrays(forms.exact)
    try:
        res = _simplex.solve_standard_form(A, b, c, lb, ub, tol=feas_tol,
                                           feasibility_only=True)
    except _simplex.SimplexFailure as exc:
        confirmed = _exact_feasibility(forms)
        if confirmed is None:
            raise LpNumericalError(str(exc)) from exc
        return confirmed
    if res.status == "optimal":
        return True
    if res.phase1_objective <= MARGINAL_BAND:
        confirmed = _exact_feasibility(forms)
        if confirmed is not None:
            return confirmed
        logger.warning("feasibility verdict is marginal (phase-1 %.3g); reporting infeasible",
                       res.phase1_objective)
    return False


def _full_vstat(res: _simplex.SimplexResult, form: ExactForm):
    # The float result reports structural statuses only; rebuild the full vector.
    vstat = list(res.vstat)
    assert len(vstat) == form.ncols
    return vstat


def _exact_feasibility(forms: _Forms) -> bool | None:
    try:
        status, _, _ = _exact.exact_solve(forms.exact, feasibility_only=True)
    except _exact.ExactSolveError:
        return None
    return status == "optimal"


def _exact_from_scratch(lp: LinearProgram, forms: _Forms) -> LpSolution:
    try:
        status, x, obj = _exact.exact_solve(forms.exact)
    except _exact.ExactSolveError as exc:
        raise LpNumericalError(str(exc)) from exc
    if status == "infeasible":
        return LpSolution("infeasible", {}, 0.0, False, True)
    if status == "unbounded":
        return LpSolution("unbounded", {}, -np.inf, False, True)
    values = {var.name: to_fraction(x[i]) for i, var in enumerate(lp.variables)}
    return LpSolution("optimal", values, to_fraction(obj), True, True,
                      solver="rational-simplex")
