"""Link reliability under correlated retransmissions, and end-to-end path reliability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .neighborhood import CollisionBreakdown, union
from .params import DerivedTiming, ProtocolParams
from .topology import Topology

STATES = ("succ", "cf", (0, 0), (1, 0), (0, 1), (1, 1))
SUCC, CF, S00, S10, S01, S11 = range(6)
TRANSIENT = (S00, S10, S01, S11)

ENTRY_TOL = 1e-12
RENORM_TOL = 1e-9


class ModelInconsistency(ArithmeticError):
    pass


@dataclass(frozen=True)
class RepeatedCollision:
    p_bc1: float   # hidden retransmitters collide again
    p_bsc1: float  # mutually visible retransmitters collide again
    omega: int


def repeated_collision_probs(params: ProtocolParams, timing: DerivedTiming) -> RepeatedCollision:
    w0 = params.w0
    # backoff offsets h = 1..omega separate two packets of length L
    omega = math.floor(max(w0 - timing.packet_units - 1.0, 0.0))
    return RepeatedCollision(1.0 - (omega + omega ** 2) / w0 ** 2, 1.0 / w0, omega)


@dataclass
class RetransChain:
    matrix: np.ndarray
    b: float
    p_bc1: float
    p_bsc1: float
    omega: int
    clamped: float = 0.0  # amount by which the mutual disturbances exceeded P(lost)


def build_retrans_chain(bd: CollisionBreakdown, params: ProtocolParams,
                        rc: RepeatedCollision) -> RetransChain:
    cf = bd.alpha ** (params.mac_max_csma_backoffs + 1)
    b = 1.0 - cf
    lost = bd.p_lost_packet
    mutual = union(bd.mutual_hidden, bd.mutual_visible)
    # the mutual-disturbance window (2L + 2) can outgrow the collision
    # windows, so P(lost) - P(mutual) may dip below zero
    plain_loss = max(0.0, lost - mutual)
    P = np.zeros((6, 6))
    P[SUCC, SUCC] = 1.0
    P[CF, CF] = 1.0
    for src, (p, q) in zip(TRANSIENT, ((0, 0), (1, 0), (0, 1), (1, 1))):
        bc = rc.p_bc1 if p else 0.0
        bsc = rc.p_bsc1 if q else 0.0
        hidden = union(bd.mutual_hidden, bc)
        visible = union(bd.mutual_visible, bsc)
        P[src, CF] = cf
        P[src, SUCC] = b * (1.0 - union(lost, bc, bsc))
        P[src, S00] = b * plain_loss * (1.0 - union(bc, bsc))
        P[src, S10] = b * hidden * (1.0 - visible)
        P[src, S01] = b * (1.0 - hidden) * visible
        P[src, S11] = b * hidden * visible

    bad = np.argwhere((P < -ENTRY_TOL) | (P > 1.0 + ENTRY_TOL))
    if bad.size:
        r, c = bad[0]
        raise ModelInconsistency(
            f"retransmission chain entry {STATES[r]}->{STATES[c]} = {P[r, c]!r}")
    np.clip(P, 0.0, 1.0, out=P)
    defect = np.abs(P.sum(axis=1) - 1.0)
    clamped = max(0.0, mutual - lost)
    if defect.max() > RENORM_TOL and not clamped:
        r = int(np.argmax(defect))
        raise ModelInconsistency(f"retransmission chain row {STATES[r]} sums to {P[r].sum()!r}")
    P /= P.sum(axis=1, keepdims=True)
    return RetransChain(P, b, rc.p_bc1, rc.p_bsc1, rc.omega, clamped)


def link_reliability(chain: RetransChain, retries: int) -> float:
    """Probability of reaching success from (0, 0) within retries + 1 attempts."""
    if retries < 0:
        raise ValueError("retries must be >= 0")
    return float(np.linalg.matrix_power(chain.matrix, retries + 1)[S00, SUCC])


def reliability_by_enumeration(matrix: np.ndarray, retries: int) -> float:
    """Sum over every transient state path from (0, 0) that ends in success within retries + 1 steps."""
    total = []

    def walk(state, prob, steps_left):
        total.append(prob * matrix[state, SUCC])
        if steps_left > 1:
            for nxt in TRANSIENT:
                if matrix[state, nxt] > 0.0:
                    walk(nxt, prob * matrix[state, nxt], steps_left - 1)

    walk(S00, 1.0, retries + 1)
    return math.fsum(total)


@dataclass
class PathReliability:
    r_up: list[float]
    r_down: list[float]


def path_reliabilities(topo: Topology, link_r: Sequence[float]) -> PathReliability:
    tree = topo.tree
    up = [1.0] * topo.size
    down = [1.0] * topo.size
    for v in tree.order:
        p = tree.parent[v]
        if p is None:
            continue
        up[v] = up[p] * link_r[topo.up_link[v]]
        down[v] = down[p] * link_r[topo.down_link[v]]
    return PathReliability(up, down)
