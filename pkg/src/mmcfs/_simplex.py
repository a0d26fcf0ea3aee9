"""Dense two-phase primal simplex over bounded variables.

Works on the equality standard form A x = b, lb <= x <= ub (ub may be +inf).
Entering variables are picked by Dantzig's rule, switching to Bland's rule
after a run of degenerate steps so the method cannot cycle.  The terminal
basis is reported so callers can re-derive or certify the solution in exact
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASIC, AT_LB, AT_UB = 0, 1, 2

_STALL_LIMIT = 100  # consecutive degenerate pivots before Bland's rule kicks in


class SimplexFailure(Exception):
    """The solve could not be completed reliably (iteration cap or singular basis)."""


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None  # values for structural columns (len ncols)
    objective: float
    basis: np.ndarray | None  # basic column per row; >= ncols means artificial
    vstat: np.ndarray | None  # per-column status (structural columns only)
    art_signs: np.ndarray | None  # +-1 sign of each row's artificial column
    phase1_objective: float
    iterations: int
    residual: float


def solve_standard_form(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    tol: float = 1e-9,
    feasibility_only: bool = False,
    max_iter: int | None = None,
) -> SimplexResult:
    m, n = A.shape
    if np.any(lb > ub):
        return SimplexResult("infeasible", None, 0.0, None, None, None, np.inf, 0, np.inf)
    if m == 0:
        return _solve_unconstrained(c, lb, ub)

    if max_iter is None:
        max_iter = 20000 + 50 * (m + n)

    # Working tableau over [A | artificials]; artificial i is sign_i * e_i.
    x0 = lb.copy()
    r = b - A @ x0
    signs = np.where(r >= 0, 1.0, -1.0)
    T = np.empty((m, n + m))
    T[:, :n] = A * signs[:, None]
    T[:, n:] = np.eye(m)
    xB = np.abs(r)
    basis = np.arange(n, n + m)
    vstat = np.full(n + m, AT_LB, dtype=np.int8)
    vstat[basis] = BASIC

    lb_ext = np.concatenate([lb, np.zeros(m)])
    ub_ext = np.concatenate([ub, np.full(m, np.inf)])

    state = _State(T, xB, basis, vstat, lb_ext, ub_ext, tol, n)

    # Phase 1: minimise the artificial total; artificials are locked out
    # permanently once they leave the basis.
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    d = c1 - T.sum(axis=0)
    d[basis] = 0.0
    iters = _pivot_loop(state, d, max_iter, lock_artificials=True)
    if iters < 0:
        raise SimplexFailure("phase 1 iteration cap exceeded")
    art_rows = basis >= n
    p1 = float(xB[art_rows].sum()) if art_rows.any() else 0.0
    if p1 > tol:
        return SimplexResult("infeasible", None, 0.0, basis.copy(), vstat[:n].copy(),
                             signs.copy(), p1, iters, np.inf)

    _pivot_out_artificials(state)
    ub_ext[n:] = 0.0  # pin any leftover artificials for phase 2

    if feasibility_only:
        x = _extract(state, A, b, lb, ub, signs)
        residual = float(np.max(np.abs(A @ x - b))) if m else 0.0
        return SimplexResult("optimal", x, 0.0, state.basis.copy(), state.vstat[:n].copy(),
                             signs, p1, iters, residual)

    # Phase 2.
    c_ext = np.concatenate([c, np.zeros(m)])
    d = c_ext - c_ext[state.basis] @ state.T
    d[state.basis] = 0.0
    iters2 = _pivot_loop(state, d, max_iter, lock_artificials=False)
    if iters2 < 0:
        raise SimplexFailure("phase 2 iteration cap exceeded")
    if state.unbounded:
        return SimplexResult("unbounded", None, -np.inf, state.basis.copy(),
                             state.vstat[:n].copy(), signs, p1, iters + iters2, np.inf)

    x = _extract(state, A, b, lb, ub, signs)
    residual = float(np.max(np.abs(A @ x - b))) if m else 0.0
    return SimplexResult("optimal", x, float(c @ x), state.basis.copy(),
                         state.vstat[:n].copy(), signs, p1, iters + iters2, residual)


def _solve_unconstrained(c: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> SimplexResult:
    x = lb.copy()
    take_ub = c < 0
    if np.any(take_ub & np.isinf(ub)):
        return SimplexResult("unbounded", None, -np.inf, np.empty(0, dtype=int),
                             np.full(len(c), AT_LB, dtype=np.int8), np.empty(0), 0.0, 0, 0.0)
    x[take_ub] = ub[take_ub]
    vstat = np.where(take_ub, AT_UB, AT_LB).astype(np.int8)
    return SimplexResult("optimal", x, float(c @ x), np.empty(0, dtype=int), vstat,
                         np.empty(0), 0.0, 0, 0.0)


class _State:
    def __init__(self, T, xB, basis, vstat, lb, ub, tol, nstruct):
        self.T = T
        self.xB = xB
        self.basis = basis
        self.vstat = vstat
        self.lb = lb
        self.ub = ub
        self.tol = tol
        self.nstruct = nstruct
        self.unbounded = False


def _pivot_loop(state: _State, d: np.ndarray, max_iter: int, *, lock_artificials: bool) -> int:
    T, xB, basis, vstat = state.T, state.xB, state.basis, state.vstat
    lb, ub, tol = state.lb, state.ub, state.tol
    n = state.nstruct
    stall = 0
    bland = False
    for iteration in range(max_iter):
        free = ub - lb > tol
        incr = (vstat == AT_LB) & (d < -tol) & free
        decr = (vstat == AT_UB) & (d > tol) & free
        eligible = incr | decr
        if not eligible.any():
            return iteration
        if bland:
            j = int(np.flatnonzero(eligible)[0])
        else:
            score = np.where(incr, -d, 0.0) + np.where(decr, d, 0.0)
            j = int(np.argmax(score))
        direction = 1.0 if vstat[j] == AT_LB else -1.0

        g = -direction * T[:, j]
        # Ratio test: how far can the entering variable move?
        t_best = ub[j] - lb[j]  # own bound flip
        leave_row = -1
        rows_up = g > 1e-11
        rows_dn = g < -1e-11
        with np.errstate(invalid="ignore", divide="ignore"):
            t_up = np.where(rows_up, (ub[basis] - xB) / np.where(rows_up, g, 1.0), np.inf)
            t_dn = np.where(rows_dn, (lb[basis] - xB) / np.where(rows_dn, g, -1.0), np.inf)
        t_rows = np.minimum(t_up, t_dn)
        t_rows = np.where(t_rows < 0.0, 0.0, t_rows)  # clamp tiny negative ratios
        r_min = float(t_rows.min(initial=np.inf))
        if r_min < t_best:
            t_best = r_min
            near = np.flatnonzero(t_rows <= r_min + 1e-9 * (1.0 + abs(r_min)))
            if bland:
                leave_row = int(near[np.argmin(basis[near])])
            else:
                leave_row = int(near[np.argmax(np.abs(g[near]))])
        if not np.isfinite(t_best):
            state.unbounded = True
            return iteration
        t_best = max(t_best, 0.0)

        if t_best <= 1e-11:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False

        if leave_row < 0:
            # Bound flip: the entering variable traverses its whole range.
            xB += t_best * g
            vstat[j] = AT_UB if direction > 0 else AT_LB
            continue

        enter_value = (lb[j] if direction > 0 else ub[j]) + direction * t_best
        leaving = int(basis[leave_row])
        xB += t_best * g
        vstat[leaving] = AT_LB if g[leave_row] < 0 else AT_UB
        if lock_artificials and leaving >= n:
            ub[leaving] = 0.0
        piv = T[leave_row, j]
        if abs(piv) < 1e-12:
            raise SimplexFailure("vanishing pivot element")
        T[leave_row] /= piv
        col = T[:, j].copy()
        col[leave_row] = 0.0
        T -= np.outer(col, T[leave_row])
        d -= d[j] * T[leave_row]
        basis[leave_row] = j
        vstat[j] = BASIC
        xB[leave_row] = enter_value
        d[j] = 0.0
    return -1


def _pivot_out_artificials(state: _State) -> None:
    """Replace basic artificials with structural columns where possible."""
    T, basis, vstat, n = state.T, state.basis, state.vstat, state.nstruct
    for row in np.flatnonzero(basis >= n):
        candidates = np.flatnonzero((np.abs(T[row, :n]) > 1e-8) & (vstat[:n] != BASIC))
        if candidates.size == 0:
            continue  # redundant row; artificial stays pinned at zero
        j = int(candidates[np.argmax(np.abs(T[row, candidates]))])
        leaving = int(basis[row])
        piv = T[row, j]
        T[row] /= piv
        col = T[:, j].copy()
        col[row] = 0.0
        T -= np.outer(col, T[row])
        basis[row] = j
        vstat[j] = BASIC
        vstat[leaving] = AT_LB
        state.ub[leaving] = 0.0
        state.xB[row] = 0.0


def _extract(state: _State, A, b, lb, ub, signs) -> np.ndarray:
    """Re-derive the solution from the terminal basis against the original data."""
    n = state.nstruct
    x = np.where(state.vstat[:n] == AT_UB, ub, lb)
    basic_struct = state.basis[state.basis < n]
    x[basic_struct] = 0.0
    m = A.shape[0]
    B = np.zeros((m, m))
    for i, col in enumerate(state.basis):
        if col < n:
            B[:, i] = A[:, col]
        else:
            B[col - n, i] = signs[col - n]
    rhs = b - A @ x
    try:
        vals = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        vals = state.xB  # fall back on the tableau values accumulated while pivoting
    for i, col in enumerate(state.basis):
        if col < n:
            x[col] = vals[i]
    return x
