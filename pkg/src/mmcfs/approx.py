"""LP-rounding approximation with the max(1/alpha, 2) guarantee.

Builds the relaxation of the subgraph-selection integer program (indicator
variable per edge, one flow system per edge-commodity), solves it for a
basic optimum, and selects every edge with a positive indicator.  The bucket
statistics (how many indicators sit at 0, in (0, alpha), in [alpha, 1), at 1)
certify that the returned optimum really is basic: a basic optimum never has
more low-bucket edges than saturated ones.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass
from fractions import Fraction

from .graph import EdgeId, Instance, ValidationError
from .lp import FEAS_TOL, LinearProgram, LpBuilder, solve_basic
from .routability import FlowAssignment, is_feasible_solution

logger = logging.getLogger(__name__)

EPS_X = 1e-7  # classification tolerance for indicator values
AUTO_EXACT_VARS = 500  # auto mode certifies exactly up to this many LP variables


class BasicnessViolation(RuntimeError):
    """A bucket count contradicts the basic-optimum lemma (n_low > n_one)."""


class ApproxInternalError(RuntimeError):
    """The rounded edge set failed re-verification even after threshold halving."""


@dataclass(frozen=True)
class BucketStats:
    n_zero: int
    n_low: int
    n_mid: int
    n_one: int

    @property
    def total(self) -> int:
        return self.n_zero + self.n_low + self.n_mid + self.n_one

    def as_dict(self) -> dict[str, int]:
        return {"low": self.n_low, "mid": self.n_mid, "one": self.n_one, "zero": self.n_zero}


@dataclass
class FractionalSolution:
    x: dict[EdgeId, float | Fraction]
    flows: FlowAssignment
    objective: float | Fraction
    basic: bool
    exact: bool
    lp_mode: str


@dataclass
class SolveReport:
    method: str
    solution: frozenset[EdgeId]
    z: int
    z_star: float | Fraction
    buckets: BucketStats
    guarantee_value: Fraction
    ratio_bound_vs_lp: float
    wall_ms: float
    lp_mode: str
    z_int: int | None = None
    nodes_explored: int | None = None

    def as_dict(self) -> dict:
        doc = {
            "buckets": self.buckets.as_dict(),
            "guarantee": self.guarantee_value,
            "lp_mode": self.lp_mode,
            "method": self.method,
            "ratio_bound_vs_lp": self.ratio_bound_vs_lp,
            "wall_ms": self.wall_ms,
            "z": self.z,
            "z_star": self.z_star if isinstance(self.z_star, Fraction) else float(self.z_star),
        }
        if self.z_int is not None:
            doc["z_int"] = self.z_int
            doc["ratio"] = self.z / self.z_int if self.z_int else 1.0
        if self.nodes_explored is not None:
            doc["nodes_explored"] = self.nodes_explored
        return doc


def guarantee(alpha: Fraction | int | str) -> Fraction:
    """Worst-case approximation factor max(1/alpha, 2)."""
    alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie strictly between 0 and 1")
    return max(1 / alpha, Fraction(2))


# ---------------------------------------------------------------------------
# relaxation construction


def build_relaxation(instance: Instance) -> LinearProgram:
    lp, _, _ = _build_relaxation_indexed(instance)
    return lp


def _build_relaxation_indexed(instance: Instance):
    graph = instance.graph
    m = instance.edge_count
    n = instance.vertex_count
    builder = LpBuilder()
    x_of = [builder.add_var(f"x_{e}", 0, 1) for e in range(m)]
    for e in range(m):
        builder.set_objective_coeff(x_of[e], 1)
    f_of: dict[tuple[EdgeId, EdgeId], int] = {}
    for comm in range(m):
        for e in range(m):
            f_of[(comm, e)] = builder.add_var(f"f_{comm}_{e}", 0, None)
    for comm in range(m):
        s, t = graph.edges[comm]
        demand = instance.alpha * instance.cap[comm]
        for v in range(n):
            coeffs: dict[int, Fraction] = {}
            for e in range(m):
                tail, head = graph.edges[e]
                if head == v:
                    coeffs[f_of[(comm, e)]] = coeffs.get(f_of[(comm, e)], Fraction(0)) + 1
                if tail == v:
                    coeffs[f_of[(comm, e)]] = coeffs.get(f_of[(comm, e)], Fraction(0)) - 1
            rhs = Fraction(0)
            if v == t:
                rhs += demand
            if v == s:
                rhs -= demand
            builder.add_constraint(coeffs, "=", rhs)
    for e in range(m):
        coeffs = {f_of[(comm, e)]: Fraction(1) for comm in range(m)}
        coeffs[x_of[e]] = -instance.cap[e]
        builder.add_constraint(coeffs, "<=", 0)
    return builder.build(), x_of, f_of


# ---------------------------------------------------------------------------
# the all-direct optimality certificate

def _exact_distance(instance: Instance, source: int, target: int) -> Fraction | None:
    graph = instance.graph
    dist = {source: Fraction(0)}
    done: set[int] = set()
    heap: list[tuple[Fraction, int]] = [(Fraction(0), source)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == target:
            return d
        for eid in graph.out_edges(v):
            h = graph.edges[eid][1]
            if h in done:
                continue
            nd = d + 1 / instance.cap[eid]
            if h not in dist or nd < dist[h]:
                dist[h] = nd
                heapq.heappush(heap, (nd, h))
    return dist.get(target)


def _direct_certificate(instance: Instance) -> bool:
    """True when every edge is a minimum-cost path for its own commodity.

    Then routing each commodity fully over its own edge is an optimal basic
    solution of the relaxation (cost of any feasible solution is at least the
    sum of demand times min-cost distance).
    """
    for eid, (s, t) in enumerate(instance.graph.edges):
        if _exact_distance(instance, s, t) != 1 / instance.cap[eid]:
            return False
    return True


def _all_direct_solution(instance: Instance, lp_mode: str) -> FractionalSolution:
    alpha = instance.alpha
    x = {e: alpha for e in instance.edge_ids()}
    flows = FlowAssignment({(e, e): alpha * instance.cap[e] for e in instance.edge_ids()})
    return FractionalSolution(x=x, flows=flows, objective=alpha * instance.edge_count,
                              basic=True, exact=True, lp_mode=lp_mode + "+direct-certificate")


# ---------------------------------------------------------------------------
# solving


def solve_relaxation(instance: Instance, lp_mode: str = "auto") -> FractionalSolution:
    """Basic optimum of the relaxation; exact rationals when certified."""
    if lp_mode not in ("float", "exact", "auto"):
        raise ValidationError(f"unknown lp mode {lp_mode!r}")
    m = instance.edge_count
    if m == 0:
        return FractionalSolution({}, FlowAssignment({}), Fraction(0), True, True, lp_mode)
    if lp_mode in ("exact", "auto") and _direct_certificate(instance):
        return _all_direct_solution(instance, lp_mode)
    lp, _, _ = _build_relaxation_indexed(instance)
    mode = lp_mode
    if lp_mode == "auto":
        mode = "auto" if lp.nvars <= AUTO_EXACT_VARS else "float"
    solution = solve_basic(lp, mode=mode)
    if solution.status != "optimal":
        raise ApproxInternalError(f"relaxation solve returned {solution.status}; "
                                  "the all-direct point should always be feasible")
    x = {e: solution.values[f"x_{e}"] for e in range(m)}
    zero = Fraction(0) if solution.exact else 0.0
    flows = {}
    for comm in range(m):
        for e in range(m):
            value = solution.values[f"f_{comm}_{e}"]
            if value > zero:
                flows[(comm, e)] = value
    return FractionalSolution(x=x, flows=FlowAssignment(flows),
                              objective=solution.objective_value,
                              basic=solution.is_basic, exact=solution.exact,
                              lp_mode=lp_mode if not solution.exact else lp_mode + "+rational")


def bucket_stats(solution: FractionalSolution, alpha: Fraction,
                 x_tol: float = EPS_X) -> BucketStats:
    """Classify indicator values; raises when the basic-optimum count fails."""
    alpha_f = float(alpha)
    n_zero = n_low = n_mid = n_one = 0
    for _, value in sorted(solution.x.items()):
        if solution.exact:
            exact = Fraction(value)
            if exact == 1:
                n_one += 1
            elif exact == 0:
                n_zero += 1
            elif exact < alpha:
                n_low += 1
            else:
                n_mid += 1
            continue
        value = float(value)
        if abs(value - 1) <= x_tol:
            n_one += 1
        elif abs(value - alpha_f) <= x_tol:
            n_mid += 1  # the guarantee's counting interval is closed at alpha
        elif value <= x_tol:
            n_zero += 1
        elif value < alpha_f:
            n_low += 1
        else:
            n_mid += 1
    stats = BucketStats(n_zero, n_low, n_mid, n_one)
    if solution.basic and stats.n_low > stats.n_one:
        raise BasicnessViolation(
            f"basic optimum reported n_low={stats.n_low} > n_one={stats.n_one}")
    return stats


def round_up(solution: FractionalSolution, x_tol: float = EPS_X) -> frozenset[EdgeId]:
    if solution.exact:
        return frozenset(e for e, v in solution.x.items() if v > 0)
    return frozenset(e for e, v in solution.x.items() if float(v) > x_tol)


def solve_approx(instance: Instance, *, lp_mode: str = "auto",
                 x_tol: float = EPS_X, feas_tol: float = FEAS_TOL) -> SolveReport:
    """Round a basic optimum of the relaxation up to an edge set."""
    start = time.perf_counter()
    frac = solve_relaxation(instance, lp_mode)
    chosen = round_up(frac, x_tol)
    if not is_feasible_solution(instance, chosen, feas_tol=feas_tol):
        # Insurance against float misclassification of a tiny positive value.
        chosen = round_up(frac, x_tol / 2)
        if not is_feasible_solution(instance, chosen, feas_tol=feas_tol):
            raise ApproxInternalError("rounded edge set failed the feasibility check")
        logger.warning("rounding threshold halved once to restore feasibility")
    buckets = bucket_stats(frac, instance.alpha, x_tol)
    z = len(chosen)
    z_star = frac.objective
    bound = guarantee(instance.alpha)
    if z_star:
        ratio = z / float(z_star)
    else:
        ratio = 1.0
    if float(z) > float(bound) * float(z_star) + x_tol:
        raise ApproxInternalError(
            f"rounding exceeded the proven LP bound: {z} > {float(bound)} * {float(z_star)}")
    wall_ms = (time.perf_counter() - start) * 1000.0
    return SolveReport(method="approx", solution=chosen, z=z, z_star=z_star,
                       buckets=buckets, guarantee_value=bound,
                       ratio_bound_vs_lp=ratio, wall_ms=wall_ms, lp_mode=frac.lp_mode)


# ---------------------------------------------------------------------------
# saturated-path diagnostics


def _cancel_cycles(flow: dict[EdgeId, float | Fraction], instance: Instance,
                   tol: float) -> dict[EdgeId, float | Fraction]:
    """Remove directed flow cycles; conservation is untouched."""
    graph = instance.graph
    work = dict(flow)
    while True:
        support = {e for e, v in work.items() if float(v) > tol}
        adj: dict[int, list[EdgeId]] = {}
        for e in support:
            adj.setdefault(graph.edges[e][0], []).append(e)
        cycle = _find_cycle(graph, adj)
        if cycle is None:
            return work
        delta = min(work[e] for e in cycle)
        for e in cycle:
            work[e] = work[e] - delta
            if float(work[e]) <= tol:
                work.pop(e, None)


def _find_cycle(graph, adj: dict[int, list[EdgeId]]) -> list[EdgeId] | None:
    state: dict[int, int] = {}
    stack_edges: list[EdgeId] = []
    path: list[int] = []

    def dfs(v: int) -> list[EdgeId] | None:
        state[v] = 1
        path.append(v)
        for eid in adj.get(v, ()):
            h = graph.edges[eid][1]
            if state.get(h, 0) == 1:
                i = path.index(h)
                return stack_edges[i:] + [eid]
            if state.get(h, 0) == 0:
                stack_edges.append(eid)
                found = dfs(h)
                if found is not None:
                    return found
                stack_edges.pop()
        state[v] = 2
        path.pop()
        return None

    for v in sorted(adj):
        if state.get(v, 0) == 0:
            found = dfs(v)
            if found is not None:
                return found
    return None


def verify_saturated_path_property(instance: Instance, solution: FractionalSolution,
                                   *, x_tol: float = EPS_X,
                                   feas_tol: float = FEAS_TOL) -> bool:
    """Every positive-flow alternative path of a low-bucket edge must cross a
    saturated edge (indicator exactly 1); vacuously true without low edges."""
    graph = instance.graph
    alpha_f = float(instance.alpha)

    def is_one(e: EdgeId) -> bool:
        v = solution.x.get(e, 0)
        return Fraction(v) == 1 if solution.exact else abs(float(v) - 1) <= x_tol

    def is_low(e: EdgeId) -> bool:
        v = solution.x.get(e, 0)
        if solution.exact:
            return 0 < Fraction(v) < instance.alpha
        fv = float(v)
        return x_tol < fv < alpha_f - x_tol

    for e in instance.edge_ids():
        if not is_low(e):
            continue
        s, t = graph.edges[e]
        commodity_flow = solution.flows.commodity_flows(e)
        commodity_flow.pop(e, None)
        commodity_flow = _cancel_cycles(commodity_flow, instance, feas_tol)
        support = [eid for eid, v in commodity_flow.items() if float(v) > feas_tol]
        adj: dict[int, list[EdgeId]] = {}
        for eid in sorted(support):
            adj.setdefault(graph.edges[eid][0], []).append(eid)
        for path in _enumerate_paths(graph, adj, s, t):
            if not any(is_one(pe) for pe in path):
                return False
    return True


def _enumerate_paths(graph, adj: dict[int, list[EdgeId]], s: int, t: int,
                     limit: int = 100_000):
    stack: list[tuple[int, list[EdgeId]]] = [(s, [])]
    produced = 0
    while stack:
        v, path = stack.pop()
        if v == t and path:
            produced += 1
            if produced > limit:
                raise RuntimeError("path enumeration limit exceeded")
            yield path
            continue
        for eid in adj.get(v, ()):
            if eid in path:
                continue
            stack.append((graph.edges[eid][1], path + [eid]))
