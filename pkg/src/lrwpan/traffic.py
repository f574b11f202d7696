"""Per-link offered and forwarded packet rates over the routing tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .params import DerivedTiming
from .topology import Topology


@dataclass
class FlowState:
    rate: np.ndarray       # packets per time unit offered to the link sender
    forwarded: np.ndarray  # packets per time unit the receiver passes on
    p_send: np.ndarray     # probability of a pending packet per time unit


def distribute_traffic(topo: Topology, timing: DerivedTiming,
                       reliability: Sequence[float] | np.ndarray) -> FlowState:
    """Evaluate the upstream (leaves first) and downstream (root first) flow recursions."""
    rel = np.asarray(reliability, dtype=float)
    nlinks = len(topo.links)
    if rel.shape != (nlinks,):
        raise ValueError(f"expected {nlinks} reliabilities, got shape {rel.shape}")
    if np.any(~np.isfinite(rel)) or np.any(rel < 0.0) or np.any(rel > 1.0):
        bad = int(np.flatnonzero(~((rel >= 0.0) & (rel <= 1.0)))[0])
        raise ValueError(f"reliability of link {bad} outside [0, 1]: {rel[bad]!r}")

    tree = topo.tree
    rate = np.zeros(nlinks)
    fwd = np.zeros(nlinks)

    for v in reversed(tree.order):
        if v == tree.gateway:
            continue
        lid = topo.up_link[v]
        rate[lid] = timing.rate_up + sum(fwd[topo.up_link[c]] for c in tree.children[v])
        fwd[lid] = rate[lid] * rel[lid]

    desc = tree.descendant_count
    for v in tree.order:
        if v == tree.gateway:
            inflow = timing.rate_down
        else:
            inflow = fwd[topo.down_link[v]]
        for w in tree.children[v]:
            lid = topo.down_link[w]
            rate[lid] = (1 + desc[w]) / desc[v] * inflow
            fwd[lid] = rate[lid] * rel[lid] * desc[w] / (1 + desc[w])

    return FlowState(rate, fwd, -np.expm1(-rate))


def split_fractions(topo: Topology) -> dict[int, float]:
    """Sum of downstream split fractions out of every node that has children."""
    desc = topo.tree.descendant_count
    return {v: sum((1 + desc[w]) / desc[v] for w in topo.tree.children[v])
            for v in range(topo.size) if topo.tree.children[v]}
