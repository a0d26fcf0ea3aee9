"""Traffic matrices, routability checking, and direct-flow extraction.

An edge set `A` is a feasible subgraph solution iff the single scaled
super-matrix (each edge demanding its own capacity) is routable inside `A`;
every check here reduces to multi-commodity-flow feasibility restricted to
the active edges.  Cheap certificates run first: an unreachable commodity
proves infeasibility, an exact-rational single-path routing proves
feasibility; only the remaining cases go to the LP.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .graph import EdgeId, Instance, ValidationError, validate_edge_set
from .lp import FEAS_TOL, LinearProgram, LpBuilder, check_feasible, solve_basic

SAMPLE_RESOLUTION = 1 << 16


class InfeasibleFlowError(RuntimeError):
    """A flow was requested for demands that are not routable."""


@dataclass(frozen=True)
class TrafficMatrix:
    """Per-edge-commodity demands (absent edge = zero demand)."""

    demands: Mapping[EdgeId, Fraction]

    def __post_init__(self) -> None:
        for eid, value in self.demands.items():
            if value < 0:
                raise ValidationError(f"demand on edge {eid} must be nonnegative")

    def demand(self, eid: EdgeId) -> Fraction:
        return self.demands.get(eid, Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        keys = set(self.demands) | set(other.demands)
        return all(self.demand(k) == other.demand(k) for k in keys)


@dataclass(frozen=True)
class FlowAssignment:
    """Sparse per-commodity edge flows: (commodity, edge) -> value."""

    flow: Mapping[tuple[EdgeId, EdgeId], float | Fraction]

    def value(self, commodity: EdgeId, edge: EdgeId):
        return self.flow.get((commodity, edge), 0)

    def total_on_edge(self, edge: EdgeId):
        return sum(v for (_, e), v in self.flow.items() if e == edge)

    def commodity_flows(self, commodity: EdgeId) -> dict[EdgeId, float | Fraction]:
        return {e: v for (k, e), v in self.flow.items() if k == commodity}


def super_traffic_matrix(instance: Instance) -> TrafficMatrix:
    """The single hardest matrix: every edge demands its full capacity."""
    return TrafficMatrix({eid: instance.cap[eid] for eid in instance.edge_ids()})


def _positive_demands(instance: Instance, traffic: TrafficMatrix,
                      scale: Fraction) -> dict[EdgeId, Fraction]:
    out: dict[EdgeId, Fraction] = {}
    for eid, value in traffic.demands.items():
        if not 0 <= eid < instance.edge_count:
            raise ValidationError(f"traffic references unknown edge {eid}")
        scaled = scale * value
        if scaled > 0:
            out[eid] = scaled
    return out


def _reachability_ok(instance: Instance, active: frozenset[EdgeId],
                     demands: Mapping[EdgeId, Fraction]) -> bool:
    graph = instance.graph
    reach_cache: dict[int, set[int]] = {}
    for eid in demands:
        s, t = graph.edges[eid]
        if s not in reach_cache:
            reach_cache[s] = graph.reachable(s, allowed_edges=active)
        if t not in reach_cache[s]:
            return False
    return True


def _shortest_path(instance: Instance, active: frozenset[EdgeId], source: int,
                   target: int) -> list[EdgeId] | None:
    """Min-cost path under cost 1/cap, deterministic tie-breaks, exact arithmetic."""
    graph = instance.graph
    dist: dict[int, Fraction] = {source: Fraction(0)}
    parent: dict[int, EdgeId] = {}
    heap: list[tuple[Fraction, int]] = [(Fraction(0), source)]
    done: set[int] = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == target:
            break
        for eid in graph.out_edges(v):
            if eid not in active:
                continue
            h = graph.edges[eid][1]
            if h in done:
                continue
            nd = d + 1 / instance.cap[eid]
            if h not in dist or nd < dist[h]:
                dist[h] = nd
                parent[h] = eid
                heapq.heappush(heap, (nd, h))
    if target != source and target not in done:
        return None
    path: list[EdgeId] = []
    v = target
    while v != source:
        eid = parent[v]
        path.append(eid)
        v = graph.edges[eid][0]
    path.reverse()
    return path


def _greedy_certificate(instance: Instance, active: frozenset[EdgeId],
                        demands: Mapping[EdgeId, Fraction]) -> bool:
    """Exact single-path routing; success certifies routability, failure says nothing."""
    loads: dict[EdgeId, Fraction] = {}
    for eid in sorted(demands):
        s, t = instance.graph.edges[eid]
        path = _shortest_path(instance, active, s, t)
        if path is None:
            return False
        for pe in path:
            loads[pe] = loads.get(pe, Fraction(0)) + demands[eid]
    return all(load <= instance.cap[e] for e, load in loads.items())


def routability_lp(instance: Instance, active: frozenset[EdgeId],
                   demands: Mapping[EdgeId, Fraction],
                   fixed_direct: bool = False,
                   minimize_cost: bool = False) -> tuple[LinearProgram, dict[tuple[EdgeId, EdgeId], int]]:
    """Flow-feasibility LP restricted to `active`; returns varindex map for extraction."""
    graph = instance.graph
    builder = LpBuilder()
    active_sorted = sorted(active)
    var_of: dict[tuple[EdgeId, EdgeId], int] = {}
    for comm in sorted(demands):
        for eid in active_sorted:
            if fixed_direct and eid == comm:
                idx = builder.add_var(f"f_{comm}_{eid}", demands[comm], demands[comm])
            else:
                idx = builder.add_var(f"f_{comm}_{eid}", 0, None)
            var_of[(comm, eid)] = idx
            if minimize_cost:
                builder.set_objective_coeff(idx, 1 / instance.cap[eid])
    touched = sorted({graph.edges[e][0] for e in active_sorted}
                     | {graph.edges[e][1] for e in active_sorted})
    for comm, demand in sorted(demands.items()):
        s, t = graph.edges[comm]
        for v in sorted(set(touched) | {s, t}):
            coeffs: dict[int, Fraction] = {}
            for eid in active_sorted:
                tail, head = graph.edges[eid]
                if head == v:
                    coeffs[var_of[(comm, eid)]] = coeffs.get(var_of[(comm, eid)], Fraction(0)) + 1
                if tail == v:
                    coeffs[var_of[(comm, eid)]] = coeffs.get(var_of[(comm, eid)], Fraction(0)) - 1
            rhs = Fraction(0)
            if v == t:
                rhs += demand
            if v == s:
                rhs -= demand
            if coeffs or rhs != 0:
                builder.add_constraint(coeffs, "=", rhs)
    for eid in active_sorted:
        coeffs = {var_of[(comm, eid)]: Fraction(1) for comm in sorted(demands)}
        builder.add_constraint(coeffs, "<=", instance.cap[eid])
    return builder.build(), var_of


def is_routable(instance: Instance, active, traffic: TrafficMatrix,
                scale: Fraction | int = 1, *, feas_tol: float = FEAS_TOL) -> bool:
    """True iff scale*traffic admits an MCF that is zero outside `active`."""
    scale = Fraction(scale)
    if scale <= 0:
        raise ValidationError("scale must be positive")
    active = validate_edge_set(instance, active)
    demands = _positive_demands(instance, traffic, scale)
    if not demands:
        return True
    if not _reachability_ok(instance, active, demands):
        return False
    if _greedy_certificate(instance, active, demands):
        return True
    lp, _ = routability_lp(instance, active, demands)
    return check_feasible(lp, feas_tol=feas_tol)


def is_feasible_solution(instance: Instance, active, *, feas_tol: float = FEAS_TOL) -> bool:
    """Single-matrix test: feasible for all routable matrices iff the scaled
    super-matrix routes inside `active`."""
    return is_routable(instance, active, super_traffic_matrix(instance),
                       instance.alpha, feas_tol=feas_tol)


def direct_flow_mcf(instance: Instance, active, traffic: TrafficMatrix, *,
                    feas_tol: float = FEAS_TOL) -> FlowAssignment:
    """An MCF witnessing routability in which every active commodity carries its
    whole demand on its own edge."""
    active = validate_edge_set(instance, active)
    for eid, value in traffic.demands.items():
        if value > instance.cap[eid]:
            raise InfeasibleFlowError(
                f"demand on edge {eid} exceeds its capacity; direct flow impossible")
    demands = _positive_demands(instance, traffic, Fraction(1))
    if not demands:
        return FlowAssignment({})
    lp, var_of = routability_lp(instance, active, demands, fixed_direct=True,
                                minimize_cost=True)
    solution = solve_basic(lp, mode="float", feas_tol=feas_tol)
    if solution.status != "optimal":
        raise InfeasibleFlowError("demands are not routable in the active set "
                                  "with direct flows pinned")
    flow = {}
    for (comm, eid), idx in var_of.items():
        value = solution.values[f"f_{comm}_{eid}"]
        if comm == eid and comm in demands:
            value = demands[comm]  # pinned exactly by its bounds
        if value > feas_tol or (comm == eid and value):
            flow[(comm, eid)] = value
    return FlowAssignment(flow)


def sample_routable_matrix(instance: Instance, seed: int) -> TrafficMatrix:
    """Random matrix below the super-matrix: utilizations drawn uniformly per edge.

    Any such matrix routes in the full edge set (each commodity over its own
    edge), and the sampler is deterministic per seed.
    """
    rng = random.Random(seed)
    demands = {
        eid: instance.cap[eid] * Fraction(rng.randint(0, SAMPLE_RESOLUTION), SAMPLE_RESOLUTION)
        for eid in instance.edge_ids()
    }
    return TrafficMatrix(demands)


def flow_violations(instance: Instance, active, demands: Mapping[EdgeId, Fraction],
                    assignment: FlowAssignment) -> float:
    """Max violation of conservation/capacity/zero-outside-active, for tests."""
    active = validate_edge_set(instance, active)
    graph = instance.graph
    worst = 0.0
    totals: dict[EdgeId, float] = {}
    for (comm, eid), value in assignment.flow.items():
        if value < 0:
            worst = max(worst, float(-value))
        if eid not in active:
            worst = max(worst, float(abs(value)))
        totals[eid] = totals.get(eid, 0.0) + float(value)
    for eid, total in totals.items():
        worst = max(worst, total - float(instance.cap[eid]))
    for comm, demand in demands.items():
        s, t = graph.edges[comm]
        net = [0.0] * graph.vertex_count
        for eid in active:
            tail, head = graph.edges[eid]
            value = float(assignment.value(comm, eid))
            net[head] += value
            net[tail] -= value
        for v in range(graph.vertex_count):
            expect = float(demand) if v == t else (-float(demand) if v == s else 0.0)
            worst = max(worst, abs(net[v] - expect))
    return worst
