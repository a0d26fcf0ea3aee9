"""Canonical JSON file formats for instances, solutions, and traffic matrices.

All output is byte-stable: keys are emitted in alphabetical order, rationals
are written as `"p/q"` strings (plain ints when integral), and round-trips are
identity on content.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .graph import EdgeId, Instance, ValidationError, make_instance


class ParseError(ValueError):
    """The byte payload is not a valid document of the expected schema."""


def parse_rational(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational: {value!r}") from exc
    raise ParseError(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> int | str:
    value = Fraction(value)
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def _dumps(document: Any) -> bytes:
    return (json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def _loads(data: bytes | str) -> Any:
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# instance files


def save_instance(instance: Instance) -> bytes:
    document: dict[str, Any] = {
        "alpha": format_rational(instance.alpha),
        "vertices": instance.vertex_count,
        "edges": [
            {
                "cap": format_rational(instance.cap[eid]),
                "head": head,
                "id": eid,
                "tail": tail,
            }
            for eid, (tail, head) in enumerate(instance.graph.edges)
        ],
    }
    if instance.meta:
        document["meta"] = instance.meta
    return _dumps(document)


def load_instance(data: bytes | str) -> Instance:
    document = _loads(data)
    if not isinstance(document, dict):
        raise ParseError("instance document must be a JSON object")
    for key in ("alpha", "vertices", "edges"):
        if key not in document:
            raise ParseError(f"instance document missing field {key!r}")
    edges_field = document["edges"]
    if not isinstance(edges_field, list):
        raise ParseError("field 'edges' must be a list")
    records = []
    for entry in edges_field:
        if not isinstance(entry, dict) or not {"id", "tail", "head", "cap"} <= entry.keys():
            raise ParseError(f"bad edge record: {entry!r}")
        records.append((int(entry["id"]), int(entry["tail"]), int(entry["head"]),
                        parse_rational(entry["cap"])))
    records.sort()
    ids = [r[0] for r in records]
    if ids != list(range(len(records))):
        raise ValidationError("edge ids must be dense and unique (0..m-1)")
    return make_instance(
        vertex_count=int(document["vertices"]),
        edges=[(tail, head) for _, tail, head, _ in records],
        caps=[cap for _, _, _, cap in records],
        alpha=parse_rational(document["alpha"]),
        meta=document.get("meta") or {},
    )


def instance_hash(instance: Instance) -> str:
    return hashlib.sha256(save_instance(instance)).hexdigest()


# ---------------------------------------------------------------------------
# solution files


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, frozenset):
        return sorted(value)
    if isinstance(value, Mapping):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def save_solution(instance: Instance, solution: Iterable[EdgeId], report: Mapping[str, Any] | None = None) -> bytes:
    members = sorted({int(e) for e in solution})
    for e in members:
        if not (0 <= e < instance.edge_count):
            raise ValidationError(f"solution edge {e} not in instance")
    document = {
        "edges": members,
        "instance_hash": instance_hash(instance),
        "report": _jsonable(dict(report or {})),
    }
    return _dumps(document)


def load_solution(data: bytes | str) -> tuple[str, frozenset[EdgeId], dict]:
    document = _loads(data)
    if not isinstance(document, dict) or not {"edges", "instance_hash"} <= document.keys():
        raise ParseError("solution document must contain 'edges' and 'instance_hash'")
    edges = frozenset(int(e) for e in document["edges"])
    return str(document["instance_hash"]), edges, dict(document.get("report") or {})


# ---------------------------------------------------------------------------
# traffic matrix files


def save_traffic(demands: Mapping[EdgeId, Fraction]) -> bytes:
    document = {
        "demands": [
            {"edge": int(eid), "value": format_rational(value)}
            for eid, value in sorted(demands.items())
        ]
    }
    return _dumps(document)


def load_traffic(data: bytes | str) -> dict[EdgeId, Fraction]:
    document = _loads(data)
    if not isinstance(document, dict) or "demands" not in document:
        raise ParseError("traffic document must contain 'demands'")
    demands: dict[EdgeId, Fraction] = {}
    for entry in document["demands"]:
        if not isinstance(entry, dict) or not {"edge", "value"} <= entry.keys():
            raise ParseError(f"bad demand record: {entry!r}")
        value = parse_rational(entry["value"])
        if value < 0:
            raise ValidationError("traffic demands must be nonnegative")
        demands[int(entry["edge"])] = value
    return demands
