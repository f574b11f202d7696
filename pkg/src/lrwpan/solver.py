"""Damped fixed-point iteration over the coupled per-link unknowns."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import csma, neighborhood, reliability, traffic
from .params import DerivedTiming, ProtocolParams, TrafficParams, derive_timing
from .topology import Topology

log = logging.getLogger(__name__)

UNKNOWNS = ("rate", "p_send", "tau", "alpha", "p_noack", "reliability")

STALL_WINDOW = 50
MIN_DAMPING = 1.0 / 64.0


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.5
    tol: float = 1e-9
    max_iter: int = 10000
    init_R: float = 1.0
    init_alpha: float = 0.0
    init_tau: float = 0.0
    init_pnoack: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class LinkState:
    """Per-link unknowns, one array entry per link id."""
    rate: np.ndarray
    p_send: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    p_noack: np.ndarray
    reliability: np.ndarray

    def arrays(self):
        return [getattr(self, name) for name in UNKNOWNS]

    def copy(self) -> "LinkState":
        return LinkState(*(a.copy() for a in self.arrays()))

    def blend(self, other: "LinkState", weight: float) -> "LinkState":
        return LinkState(*((1.0 - weight) * a + weight * b
                           for a, b in zip(self.arrays(), other.arrays())))


def residual(old: LinkState, new: LinkState) -> float:
    """Max-norm of the change over all unknowns of all links."""
    worst = 0.0
    for a, b in zip(old.arrays(), new.arrays()):
        if a.shape != b.shape:
            raise ValueError(f"link sets differ: {a.shape} vs {b.shape}")
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


@dataclass
class Model:
    """Everything that stays fixed while the unknowns are iterated."""
    topology: Topology
    protocol: ProtocolParams
    timing: DerivedTiming
    events: list[neighborhood.EventSets]
    repeated: reliability.RepeatedCollision

    @classmethod
    def build(cls, topology: Topology, protocol: ProtocolParams, traffic_params: TrafficParams) -> "Model":
        timing = derive_timing(protocol, traffic_params, topology.size)
        events = [neighborhood.event_sets(topology.conflicts, l.id) for l in topology.links]
        return cls(topology, protocol, timing, events,
                   reliability.repeated_collision_probs(protocol, timing))

    @property
    def link_count(self) -> int:
        return len(self.topology.links)

    def initial_state(self, cfg: SolverConfig) -> LinkState:
        n = self.link_count
        rel = np.full(n, cfg.init_R)
        flows = traffic.distribute_traffic(self.topology, self.timing, rel)
        return LinkState(flows.rate, flows.p_send, np.full(n, cfg.init_tau),
                         np.full(n, cfg.init_alpha), np.full(n, cfg.init_pnoack), rel)


@dataclass
class PassResult:
    state: LinkState
    breakdowns: list[neighborhood.CollisionBreakdown]
    flows: traffic.FlowState


def pipeline_pass(model: Model, x: LinkState) -> PassResult:
    """One evaluation of the full model equations from iterate ``x``.

    The neighborhood reads only the previous (tau, alpha) of all links, so
    links never see partially updated neighbours. Within a link, the new
    collision probabilities feed the reliability, the new reliabilities
    feed the traffic recursion, and the CSMA chain consumes all of them.
    """
    bds = neighborhood.all_breakdowns(model.topology.links, model.events, x.tau, x.alpha, model.timing)
    n = model.link_count
    alpha = np.array([bd.alpha for bd in bds])
    p_noack = np.array([bd.p_noack for bd in bds])
    rel = np.empty(n)
    for lid, bd in enumerate(bds):
        try:
            chain = reliability.build_retrans_chain(bd, model.protocol, model.repeated)
        except reliability.ModelInconsistency as exc:
            raise reliability.ModelInconsistency(f"link {lid}: {exc}") from exc
        rel[lid] = reliability.link_reliability(chain, model.protocol.mac_max_frame_retries)
    flows = traffic.distribute_traffic(model.topology, model.timing, rel)
    tau = np.empty(n)
    for lid in range(n):
        out = csma.closed_form(csma.ChainInputs.from_timing(
            alpha[lid], p_noack[lid], flows.p_send[lid], model.timing))
        tau[lid] = out.tau
    new = LinkState(flows.rate, flows.p_send, tau, alpha, p_noack, rel)
    _check_finite(new)
    return PassResult(new, bds, flows)


def _check_finite(x: LinkState) -> None:
    for name, arr in zip(UNKNOWNS, x.arrays()):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise SolverError(f"non-finite {name} on link {int(bad[0])}: {arr[bad[0]]!r}")


@dataclass
class ModelSolution:
    state: LinkState
    breakdowns: list[neighborhood.CollisionBreakdown]
    paths: reliability.PathReliability
    iterations: int
    final_residual: float
    converged: bool
    damping: float
    trace: list[float] = field(default_factory=list)


def solve(model: Model, cfg: SolverConfig | None = None) -> ModelSolution:
    """Iterate x <- (1 - d) x + d G(x) until max |G(x) - x| <= tol.

    The damping d is halved (down to 1/64) whenever the residual has not
    improved for 50 iterations. Once the tolerance is met, the undamped
    image G(x) is returned after checking that one more pass moves it by no
    more than tol; the reported residual is that of the returned state.
    Without convergence the best iterate seen is returned.
    """
    cfg = cfg or SolverConfig()
    x = model.initial_state(cfg)
    damping = cfg.damping
    best = (np.inf, x, None)
    since_best = 0
    trace = []
    it = 0
    res = np.inf
    while it < cfg.max_iter:
        it += 1
        result = pipeline_pass(model, x)
        res = residual(x, result.state)
        trace.append(res)
        log.debug("iteration %d residual %.3e damping %.4g", it, res, damping)
        if res < best[0]:
            best = (res, x, result)
            since_best = 0
        else:
            since_best += 1
        if res <= cfg.tol:
            # take the undamped step and confirm it is itself within tolerance
            cand = result.state
            check = pipeline_pass(model, cand)
            res_cand = residual(cand, check.state)
            if res_cand <= cfg.tol:
                return _finish(model, cand, check, it, res_cand, True, damping, trace)
            x = cand
            continue
        if since_best >= STALL_WINDOW and damping > MIN_DAMPING:
            damping = max(MIN_DAMPING, damping / 2.0)
            since_best = 0
            log.info("residual stalled at %.3e, damping reduced to %.4g", best[0], damping)
        x = x.blend(result.state, damping)
    res, x, result = best
    log.warning("no convergence after %d iterations, best residual %.3e", it, res)
    return _finish(model, x, result, it, res, False, damping, trace)


def _finish(model, x, result, it, res, converged, damping, trace) -> ModelSolution:
    paths = reliability.path_reliabilities(model.topology, x.reliability)
    return ModelSolution(x, result.breakdowns, paths, it, res, converged, damping, trace)
