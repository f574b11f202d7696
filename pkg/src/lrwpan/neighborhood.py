"""Simultaneous transmissions, collision events and channel-busy probability."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np

from .params import DerivedTiming
from .topology import ConflictSets, Link

POWERSET_LIMIT = 20


def _members(links: Iterable[int], tau: np.ndarray) -> np.ndarray:
    idx = np.fromiter(links, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= len(tau)):
        raise KeyError(f"unknown link id in {sorted(idx.tolist())}")
    return idx


def some_sending(links: Iterable[int], tau: np.ndarray, alpha: np.ndarray) -> float:
    """Probability that at least one sender of ``links`` starts transmitting in a time unit."""
    idx = _members(links, tau)
    if idx.size == 0:
        return 0.0
    t, a = tau[idx], alpha[idx]
    return float(1.0 - np.prod(t * a + (1.0 - t)))


def some_occupy(t: float, links: Iterable[int], tau: np.ndarray, alpha: np.ndarray) -> float:
    """Probability of at least one transmission start within ``t`` time units."""
    if t < 0:
        raise ValueError(f"interval must be >= 0, got {t}")
    if t == 0:
        return 0.0
    return 1.0 - (1.0 - some_sending(links, tau, alpha)) ** t


def some_sending_powerset(links: Iterable[int], tau: np.ndarray, alpha: np.ndarray) -> float:
    """Same quantity as :func:`some_sending`, summed over all non-empty subsets.

    Exponential in the set size; only meant as a cross-check.
    """
    idx = _members(links, tau).tolist()
    if len(idx) > POWERSET_LIMIT:
        raise ValueError(f"set of {len(idx)} links too large for power-set enumeration")
    terms = []
    for mask in itertools.product((False, True), repeat=len(idx)):
        if not any(mask):
            continue
        w = 1.0
        blocked = 1.0
        for j, on in zip(idx, mask):
            if on:
                w *= tau[j]
                blocked *= alpha[j]
            else:
                w *= 1.0 - tau[j]
        terms.append(w * (1.0 - blocked))
    return math.fsum(terms)


def union(*probs: float) -> float:
    """P(A_1 u ... u A_n) for independent events."""
    rest = 1.0
    for p in probs:
        rest *= 1.0 - p
    return 1.0 - rest


@dataclass(frozen=True)
class EventSets:
    """Per-link link sets of every collision event, derived once from the conflict sets."""
    c: tuple[tuple[int, ...], ...]
    a: tuple[tuple[int, ...], ...]
    mutual_hidden: tuple[int, ...]
    mutual_visible: tuple[int, ...]
    busy_pkt: tuple[int, ...]
    busy_ack: tuple[int, ...]


def event_sets(sets: ConflictSets, lid: int) -> EventSets:
    ss, rs, sr, rr = sets.ss[lid], sets.rs[lid], sets.sr[lid], sets.rr[lid]

    def s(x):
        return tuple(sorted(x))

    return EventSets(
        c=(s(rs & ss), s(rs - ss), s(ss & sr & rr), s((sr & rr) - ss),
           s((ss & rr) - sr), s((rs & rr) - ss - sr), s(rr - ss - sr - rs)),
        a=(s(ss & rs), s(ss - rs)),
        mutual_hidden=s((rs & sr) - ss),
        mutual_visible=s(rs & sr & ss),
        busy_pkt=s(ss),
        busy_ack=s(sr),
    )


def event_windows(timing: DerivedTiming) -> tuple[tuple[float, ...], tuple[float, ...], float, float]:
    """Window lengths (time units) of the c, a and mutual-disturbance events."""
    L, La = timing.packet_units, timing.ack_units
    c = (2.0, 2.0 * L, 1.0, 2.0, La, La + 1.0, L + La)
    a = (1.0, La)
    return c, a, 2.0 * L + 2.0, 2.0


@dataclass
class CollisionBreakdown:
    c: tuple[float, ...]
    a: tuple[float, ...]
    p_coll_packet: float
    p_lost_packet: float
    p_coll_ack: float
    p_lost_ack: float
    p_noack: float
    alpha_pkt: float
    alpha_ack: float
    alpha: float
    mutual_hidden: float
    mutual_visible: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["c"] = list(self.c)
        d["a"] = list(self.a)
        return d


def collision_probabilities(link: Link, ev: EventSets, tau: np.ndarray, alpha: np.ndarray,
                            timing: DerivedTiming) -> CollisionBreakdown:
    cw, aw, w_hidden, w_visible = event_windows(timing)
    c = tuple(some_occupy(t, members, tau, alpha) for t, members in zip(cw, ev.c))
    a = tuple(some_occupy(t, members, tau, alpha) for t, members in zip(aw, ev.a))
    coll_pkt = union(*c)
    lost_pkt = coll_pkt + (1.0 - coll_pkt) * link.per_packet
    coll_ack = union(*a)
    lost_ack = coll_ack + (1.0 - coll_ack) * link.per_ack
    noack = lost_pkt + (1.0 - lost_pkt) * lost_ack
    a_pkt = some_occupy(timing.packet_units, ev.busy_pkt, tau, alpha)
    a_ack = some_occupy(timing.ack_units, ev.busy_ack, tau, alpha)
    return CollisionBreakdown(
        c=c, a=a,
        p_coll_packet=coll_pkt, p_lost_packet=lost_pkt,
        p_coll_ack=coll_ack, p_lost_ack=lost_ack, p_noack=noack,
        alpha_pkt=a_pkt, alpha_ack=a_ack, alpha=a_pkt + a_ack - a_pkt * a_ack,
        mutual_hidden=some_occupy(w_hidden, ev.mutual_hidden, tau, alpha),
        mutual_visible=some_occupy(w_visible, ev.mutual_visible, tau, alpha),
    )


def all_breakdowns(links: Sequence[Link], events: Sequence[EventSets], tau: np.ndarray,
                   alpha: np.ndarray, timing: DerivedTiming) -> list[CollisionBreakdown]:
    return [collision_probabilities(l, ev, tau, alpha, timing) for l, ev in zip(links, events)]
