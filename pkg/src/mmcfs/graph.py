"""Capacitated multidigraph model and the problem-instance container.

Edges are identified by dense integer ids (0..m-1).  Each edge doubles as a
commodity: the demand side of the toolkit keys everything by edge id.
Capacities and the retention ratio are exact rationals so that instances
built from expressions like (1-alpha)/alpha survive serialization untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

EdgeId = int


class ValidationError(ValueError):
    """An instance or edge set violates a structural invariant."""


@dataclass(frozen=True)
class Digraph:
    """Directed multigraph on vertices 0..vertex_count-1.

    Parallel edges are allowed (distinct ids, same endpoints); self-loops are
    rejected because a self-loop commodity is satisfied by the zero flow and
    degenerates the demand model.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]  # edges[eid] = (tail, head)

    def __post_init__(self) -> None:
        if self.vertex_count < 1:
            raise ValidationError("vertex_count must be >= 1")
        for eid, (tail, head) in enumerate(self.edges):
            if not (0 <= tail < self.vertex_count and 0 <= head < self.vertex_count):
                raise ValidationError(f"edge {eid}: endpoint out of range")
            if tail == head:
                raise ValidationError(f"edge {eid}: self-loops are not allowed")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def tail(self, eid: EdgeId) -> int:
        return self.edges[eid][0]

    def head(self, eid: EdgeId) -> int:
        return self.edges[eid][1]

    def out_edges(self, vertex: int) -> tuple[EdgeId, ...]:
        return self._adjacency()[0][vertex]

    def in_edges(self, vertex: int) -> tuple[EdgeId, ...]:
        return self._adjacency()[1][vertex]

    def _adjacency(self) -> tuple[tuple[tuple[EdgeId, ...], ...], tuple[tuple[EdgeId, ...], ...]]:
        cached = getattr(self, "_adj_cache", None)
        if cached is None:
            out: list[list[EdgeId]] = [[] for _ in range(self.vertex_count)]
            inc: list[list[EdgeId]] = [[] for _ in range(self.vertex_count)]
            for eid, (tail, head) in enumerate(self.edges):
                out[tail].append(eid)
                inc[head].append(eid)
            cached = (tuple(map(tuple, out)), tuple(map(tuple, inc)))
            object.__setattr__(self, "_adj_cache", cached)
        return cached

    def is_simple(self) -> bool:
        """True when no two edges share the same (tail, head) pair."""
        return len({(t, h) for t, h in self.edges}) == len(self.edges)

    def parallel_edges(self, eid: EdgeId) -> tuple[EdgeId, ...]:
        """Edges other than `eid` with the same endpoints."""
        pair = self.edges[eid]
        return tuple(e for e, p in enumerate(self.edges) if p == pair and e != eid)

    def reachable(self, source: int, *, skip_edge: EdgeId | None = None,
                  allowed_edges: frozenset[EdgeId] | None = None) -> set[int]:
        """Vertices reachable from `source`, optionally restricted to a subset of edges."""
        out, _ = self._adjacency()
        seen = {source}
        stack = [source]
        while stack:
            v = stack.pop()
            for eid in out[v]:
                if eid == skip_edge:
                    continue
                if allowed_edges is not None and eid not in allowed_edges:
                    continue
                h = self.edges[eid][1]
                if h not in seen:
                    seen.add(h)
                    stack.append(h)
        return seen

    def is_acyclic(self) -> bool:
        out, _ = self._adjacency()
        indeg = [0] * self.vertex_count
        for _, head in self.edges:
            indeg[head] += 1
        queue = [v for v in range(self.vertex_count) if indeg[v] == 0]
        seen = 0
        while queue:
            v = queue.pop()
            seen += 1
            for eid in out[v]:
                h = self.edges[eid][1]
                indeg[h] -= 1
                if indeg[h] == 0:
                    queue.append(h)
        return seen == self.vertex_count


@dataclass(frozen=True)
class Instance:
    """A capacitated digraph together with the retention ratio alpha."""

    graph: Digraph
    cap: tuple[Fraction, ...]  # cap[eid] > 0
    alpha: Fraction
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(self.cap) != self.graph.edge_count:
            raise ValidationError("capacity vector length must match edge count")
        for eid, c in enumerate(self.cap):
            if c <= 0:
                raise ValidationError(f"edge {eid}: capacity must be positive")
        if not (0 < self.alpha < 1):
            raise ValidationError("alpha must lie strictly between 0 and 1")

    @property
    def edge_count(self) -> int:
        return self.graph.edge_count

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    def edge_ids(self) -> range:
        return range(self.graph.edge_count)

    def all_edges(self) -> frozenset[EdgeId]:
        return frozenset(self.edge_ids())


def make_instance(vertex_count: int, edges: Sequence[tuple[int, int]],
                  caps: Sequence[Fraction | int | str], alpha: Fraction | int | str,
                  meta: dict | None = None) -> Instance:
    """Convenience constructor accepting plain ints / 'p/q' strings for rationals."""
    return Instance(
        graph=Digraph(vertex_count, tuple((int(t), int(h)) for t, h in edges)),
        cap=tuple(Fraction(c) for c in caps),
        alpha=Fraction(alpha),
        meta=dict(meta or {}),
    )


def validate_edge_set(instance: Instance, edges: Iterable[EdgeId]) -> frozenset[EdgeId]:
    """Check that `edges` is a subset of the instance's edge ids."""
    members = frozenset(int(e) for e in edges)
    for e in members:
        if not (0 <= e < instance.edge_count):
            raise ValidationError(f"edge id {e} not in instance")
    return members


def mean_capacity(instance: Instance, edges: Iterable[EdgeId]) -> Fraction:
    """Average capacity over an edge set, in exact arithmetic."""
    members = validate_edge_set(instance, edges)
    if not members:
        raise ValidationError("mean capacity of an empty edge set is undefined")
    return Fraction(sum(instance.cap[e] for e in members), len(members))
