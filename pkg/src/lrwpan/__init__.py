"""Analytical performance model for IEEE 802.15.4 unslotted CSMA/CA multi-hop networks."""

from .analog import RadioParams
from .params import ProtocolParams, TrafficParams, derive_timing
from .solver import Model, ModelSolution, SolverConfig, solve
from .topology import Node, build_links, build_topology, explicit_graph

__all__ = [
    "Model", "ModelSolution", "Node", "ProtocolParams", "RadioParams", "SolverConfig",
    "TrafficParams", "build_links", "build_topology", "derive_timing", "explicit_graph", "solve",
]
