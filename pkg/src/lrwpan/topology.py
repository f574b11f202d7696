"""Node graph, routing tree, active links and per-link conflict sets."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import analog
from .params import ProtocolParams

UP = "up"
DOWN = "down"

HOP_PENALTY = 1e-3


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    position: tuple[float, float] | None = None
    is_gateway: bool = False


@dataclass(frozen=True)
class Link:
    id: int
    sender: int
    receiver: int
    direction: str
    ber: float
    per_packet: float
    per_ack: float


@dataclass
class CandidateGraph:
    """Pairwise link qualities between all nodes.

    ``ber[v, w]`` is the bit error rate of a transmission from v to w
    (1.0 where no link exists). ``in_range[v, w]`` says whether v can
    disturb a reception at w. ``per_override`` optionally pins the packet
    and ACK error rates of individual directed pairs.
    """
    nodes: list[Node]
    ber: np.ndarray
    in_range: np.ndarray
    per_override: dict[tuple[int, int], tuple[float, float]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def gateway(self) -> int:
        return next(n.id for n in self.nodes if n.is_gateway)


def _check_nodes(nodes: Sequence[Node]) -> None:
    if len(nodes) < 2:
        raise TopologyError(f"need a gateway and at least one client, got {len(nodes)} node(s)")
    ids = [n.id for n in nodes]
    if ids != list(range(len(nodes))):
        raise TopologyError("node ids must be dense and ordered 0..N-1")
    gateways = [n.id for n in nodes if n.is_gateway]
    if len(gateways) != 1:
        raise TopologyError(f"exactly one gateway required, found {len(gateways)}")


def build_links(nodes: Sequence[Node], radio: analog.RadioParams) -> CandidateGraph:
    """Geometric mode: evaluate the analog model for every ordered node pair."""
    _check_nodes(nodes)
    missing = [n.id for n in nodes if n.position is None]
    if missing:
        raise TopologyError(f"nodes without position in geometric mode: {missing}")
    n = len(nodes)
    ber = np.ones((n, n))
    inr = np.zeros((n, n), dtype=bool)
    for v in range(n):
        for w in range(v + 1, n):
            d = math.dist(nodes[v].position, nodes[w].position)
            if d <= 0:
                raise TopologyError(f"nodes {v} and {w} share a position")
            q = analog.link_quality(radio, d)
            ber[v, w] = ber[w, v] = q.ber
            inr[v, w] = inr[w, v] = analog.in_range(radio, d)
    return CandidateGraph(list(nodes), ber, inr)


def explicit_graph(nodes: Sequence[Node],
                   links: Sequence[Mapping],
                   adjacency: Sequence[Sequence[int]] | np.ndarray) -> CandidateGraph:
    """Explicit mode: link qualities and the interference predicate are given.

    Each entry of ``links`` has ``nodes: [a, b]`` and ``ber``, and may carry
    ``per_packet`` / ``per_ack`` to pin the error rates directly. Entries
    describe both directions. ``adjacency`` is either a list of unordered
    in-range pairs or a full boolean matrix, which must be symmetric.
    """
    _check_nodes(nodes)
    n = len(nodes)
    ber = np.ones((n, n))
    overrides: dict[tuple[int, int], tuple[float, float]] = {}
    seen: set[frozenset[int]] = set()
    for entry in links:
        a, b = (int(x) for x in entry["nodes"])
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise TopologyError(f"invalid link endpoints {a}-{b}")
        key = frozenset((a, b))
        if key in seen:
            raise TopologyError(f"duplicate link {a}-{b}")
        seen.add(key)
        q = float(entry.get("ber", 0.0))
        if not 0.0 <= q <= 1.0:
            raise TopologyError(f"link {a}-{b}: ber {q} outside [0, 1]")
        ber[a, b] = ber[b, a] = q
        if "per_packet" in entry or "per_ack" in entry:
            if not ("per_packet" in entry and "per_ack" in entry):
                raise TopologyError(f"link {a}-{b}: per_packet and per_ack must be given together")
            pp, pa = float(entry["per_packet"]), float(entry["per_ack"])
            if not (0.0 <= pp <= 1.0 and 0.0 <= pa <= 1.0):
                raise TopologyError(f"link {a}-{b}: error rates outside [0, 1]")
            overrides[(a, b)] = overrides[(b, a)] = (pp, pa)
    if isinstance(adjacency, np.ndarray):
        inr = adjacency.astype(bool)
        if inr.shape != (n, n):
            raise TopologyError(f"adjacency matrix must be {n}x{n}")
        if not np.array_equal(inr, inr.T):
            bad = np.argwhere(inr != inr.T)[0]
            raise TopologyError(f"interference predicate not symmetric at {tuple(int(x) for x in bad)}")
        np.fill_diagonal(inr, False)
    else:
        inr = np.zeros((n, n), dtype=bool)
        for pair in adjacency:
            a, b = (int(x) for x in pair)
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise TopologyError(f"invalid in-range pair {a}-{b}")
            inr[a, b] = inr[b, a] = True
    return CandidateGraph(list(nodes), ber, inr, overrides)


@dataclass
class RoutingTree:
    gateway: int
    parent: list[int | None]
    children: list[list[int]]
    descendant_count: list[int]
    depth: list[int]
    order: list[int]  # root first, parents before children

    def path_to_root(self, v: int) -> list[int]:
        path = [v]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path


def edge_weight(ber: float) -> float:
    return -math.log1p(-ber) + HOP_PENALTY


def build_routing_tree(graph: CandidateGraph) -> RoutingTree:
    """Dijkstra towards the gateway; equal-cost ties go to the smaller parent id."""
    n = graph.size
    root = graph.gateway
    dist = [math.inf] * n
    parent: list[int | None] = [None] * n
    dist[root] = 0.0
    done = [False] * n
    heap = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v in range(n):
            if done[v] or v == u:
                continue
            # the tree carries traffic both ways, use the worse direction
            q = max(graph.ber[u, v], graph.ber[v, u])
            if q >= 1.0:
                continue
            nd = d + edge_weight(q)
            if nd < dist[v] or (nd == dist[v] and parent[v] is not None and u < parent[v]):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    unreachable = [v for v in range(n) if not done[v]]
    if unreachable:
        raise TopologyError(f"nodes unreachable from gateway {root}: {unreachable}")

    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        if parent[v] is not None:
            children[parent[v]].append(v)
    order = [root]
    depth = [0] * n
    for v in order:
        for c in children[v]:
            depth[c] = depth[v] + 1
            order.append(c)
    desc = [0] * n
    for v in reversed(order):
        desc[v] = sum(1 + desc[c] for c in children[v])
    return RoutingTree(root, parent, children, desc, depth, order)


@dataclass
class ConflictSets:
    ss: list[frozenset[int]]
    rs: list[frozenset[int]]
    sr: list[frozenset[int]]
    rr: list[frozenset[int]]


def build_conflict_sets(links: Sequence[Link], in_range: np.ndarray) -> ConflictSets:
    """Possibly disturbing links for every active link, by endpoint constellation."""
    snd = np.array([l.sender for l in links], dtype=int)
    rcv = np.array([l.receiver for l in links], dtype=int)
    distinct = snd[:, None] != snd[None, :]
    masks = {
        "ss": in_range[snd[:, None], snd[None, :]],
        "rs": in_range[rcv[:, None], snd[None, :]],
        "sr": in_range[snd[:, None], rcv[None, :]],
        "rr": in_range[rcv[:, None], rcv[None, :]],
    }
    out = {}
    for name, m in masks.items():
        m = m & distinct
        out[name] = [frozenset(np.flatnonzero(row).tolist()) for row in m]
    return ConflictSets(**out)


@dataclass
class Topology:
    graph: CandidateGraph
    tree: RoutingTree
    links: list[Link]
    up_link: dict[int, int]    # child node -> id of (child, parent)
    down_link: dict[int, int]  # child node -> id of (parent, child)
    conflicts: ConflictSets

    @property
    def nodes(self) -> list[Node]:
        return self.graph.nodes

    @property
    def size(self) -> int:
        return self.graph.size

    @property
    def gateway(self) -> int:
        return self.tree.gateway


def active_links(graph: CandidateGraph, tree: RoutingTree, protocol: ProtocolParams) -> list[Link]:
    """Upstream links first (ordered by child id), then downstream links."""
    clients = sorted(v for v in range(graph.size) if tree.parent[v] is not None)
    links = []
    pairs = [(c, tree.parent[c], UP) for c in clients] + [(tree.parent[c], c, DOWN) for c in clients]
    for lid, (v, w, direction) in enumerate(pairs):
        q = float(graph.ber[v, w])
        if (v, w) in graph.per_override:
            pp, pa = graph.per_override[(v, w)]
        else:
            pp = analog.packet_error_rate(q, protocol.packet_bytes)
            pa = analog.packet_error_rate(q, protocol.ack_bytes)
        links.append(Link(lid, v, w, direction, q, pp, pa))
    return links


def build_topology(graph: CandidateGraph, protocol: ProtocolParams | None = None) -> Topology:
    protocol = protocol or ProtocolParams()
    tree = build_routing_tree(graph)
    links = active_links(graph, tree, protocol)
    up = {l.sender: l.id for l in links if l.direction == UP}
    down = {l.receiver: l.id for l in links if l.direction == DOWN}
    return Topology(graph, tree, links, up, down, build_conflict_sets(links, graph.in_range))


def dump_graph(topo: Topology) -> dict:
    """Debug view: adjacency, tree and conflict sets as plain JSON data."""
    n = topo.size
    return {
        "nodes": [{"id": nd.id, "position": list(nd.position) if nd.position else None,
                   "gateway": nd.is_gateway} for nd in topo.nodes],
        "in_range": [[int(w) for w in range(n) if topo.graph.in_range[v, w]] for v in range(n)],
        "parent": topo.tree.parent,
        "descendants": topo.tree.descendant_count,
        "links": [{"id": l.id, "sender": l.sender, "receiver": l.receiver,
                   "direction": l.direction, "ber": l.ber,
                   "ss": sorted(topo.conflicts.ss[l.id]), "rs": sorted(topo.conflicts.rs[l.id]),
                   "sr": sorted(topo.conflicts.sr[l.id]), "rr": sorted(topo.conflicts.rr[l.id])}
                  for l in topo.links],
    }
