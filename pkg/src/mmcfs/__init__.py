"""Toolkit for computing edge-minimal subgraphs that keep scaled-down
multi-commodity traffic routable.

Public surface: instance model and file formats (graph, serialization),
routability checks, the LP-rounding approximation, the brute-force oracle
with structural bounds, and instance-family generators.
"""

from .graph import Digraph, EdgeId, Instance, ValidationError, make_instance, mean_capacity
from .serialization import (
    ParseError,
    instance_hash,
    load_instance,
    load_solution,
    load_traffic,
    save_instance,
    save_solution,
    save_traffic,
)

__all__ = [
    "Digraph",
    "EdgeId",
    "Instance",
    "ParseError",
    "ValidationError",
    "instance_hash",
    "load_instance",
    "load_solution",
    "load_traffic",
    "make_instance",
    "mean_capacity",
    "save_instance",
    "save_solution",
    "save_traffic",
]
