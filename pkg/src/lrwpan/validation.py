"""Oracle suites comparing the analytical shortcuts with brute-force evaluations."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import csma, neighborhood, reliability
from .params import ProtocolParams

CHAIN_TOL = 1e-9
POWERSET_TOL = 1e-12
RETRANS_TOL = 1e-12

CHAIN_ALPHAS = tuple(i / 10 for i in range(10))
CHAIN_PNOACK = (0.0, 0.25, 0.5, 0.9)
CHAIN_PSEND = (0.01, 0.5, 0.99)
CHAIN_BE = ((3, 5), (0, 0), (2, 7))
CHAIN_M = (0, 4)
CHAIN_N = (0, 3)
# default 127-byte frame: L_s = 16.4, L_c = 15.4
CHAIN_SUCCESS_UNITS = 16.4
CHAIN_FAIL_UNITS = 15.4


@dataclass
class SuiteReport:
    name: str
    cases: int
    max_error: float
    tolerance: float
    worst_case: str
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.cases} cases, max error {self.max_error:.3e} "
                f"(tol {self.tolerance:.0e}) worst at {self.worst_case} [{self.seconds:.2f} s]")


def chain_grid():
    for a, pn, ps, (lo, hi), m, n in itertools.product(
            CHAIN_ALPHAS, CHAIN_PNOACK, CHAIN_PSEND, CHAIN_BE, CHAIN_M, CHAIN_N):
        params = ProtocolParams(mac_min_be=lo, mac_max_be=hi,
                                mac_max_csma_backoffs=m, mac_max_frame_retries=n)
        yield csma.ChainInputs(a, pn, ps, params, CHAIN_SUCCESS_UNITS, CHAIN_FAIL_UNITS).integerized()


def chain_errors(inp: csma.ChainInputs) -> dict[str, float]:
    """Closed form versus explicit stationary solve at one grid point."""
    oracle = csma.build_chain_oracle(inp)
    closed = csma.closed_form(inp)
    return {
        "tau": abs(oracle.tau(inp.params) - closed.tau),
        "b000": abs(oracle.prob((0, 0, 0)) - closed.b000),
        "idle": abs(oracle.idle - closed.idle),
        "mass": abs(csma.closed_form_total_mass(inp) - 1.0),
    }


def _describe(inp: csma.ChainInputs) -> str:
    p = inp.params
    return (f"alpha={inp.alpha} p_noack={inp.p_noack} p_send={inp.p_send} "
            f"be=({p.mac_min_be},{p.mac_max_be}) m={p.mac_max_csma_backoffs} "
            f"n={p.mac_max_frame_retries}")


def run_chain_suite() -> SuiteReport:
    start = time.perf_counter()
    worst, where, cases = 0.0, "-", 0
    for inp in chain_grid():
        cases += 1
        err = max(chain_errors(inp).values())
        if err > worst:
            worst, where = err, _describe(inp)
    return SuiteReport("chain", cases, worst, CHAIN_TOL, where, time.perf_counter() - start)


def run_powerset_suite(draws: int = 1000, max_size: int = 10, seed: int = 0) -> SuiteReport:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, where = 0.0, "-"
    for d in range(draws):
        size = int(rng.integers(0, max_size + 1))
        tau, alpha = rng.uniform(size=size), rng.uniform(size=size)
        members = range(size)
        err = abs(neighborhood.some_sending(members, tau, alpha)
                  - neighborhood.some_sending_powerset(members, tau, alpha))
        if err > worst:
            worst, where = err, f"draw {d} (|S|={size})"
    return SuiteReport("powerset", draws, worst, POWERSET_TOL, where, time.perf_counter() - start)


def random_breakdown(rng: np.random.Generator) -> neighborhood.CollisionBreakdown:
    """A breakdown with random but internally consistent probabilities."""
    c = tuple(rng.uniform(0, 0.3, size=7))
    a = tuple(rng.uniform(0, 0.3, size=2))
    per_p, per_a = rng.uniform(0, 0.3, size=2)
    coll = neighborhood.union(*c)
    lost = coll + (1 - coll) * per_p
    coll_ack = neighborhood.union(*a)
    lost_ack = coll_ack + (1 - coll_ack) * per_a
    a_pkt, a_ack = rng.uniform(0, 0.7, size=2)
    return neighborhood.CollisionBreakdown(
        c=c, a=a, p_coll_packet=coll, p_lost_packet=lost, p_coll_ack=coll_ack,
        p_lost_ack=lost_ack, p_noack=lost + (1 - lost) * lost_ack,
        alpha_pkt=a_pkt, alpha_ack=a_ack, alpha=a_pkt + a_ack - a_pkt * a_ack,
        mutual_hidden=float(rng.uniform(0, 0.5 * lost)),
        mutual_visible=float(rng.uniform(0, 0.5 * lost)))


def random_retrans_case(rng: np.random.Generator):
    params = ProtocolParams(mac_min_be=int(rng.integers(0, 6)), mac_max_be=7,
                            mac_max_csma_backoffs=int(rng.integers(0, 6)),
                            mac_max_frame_retries=int(rng.integers(0, 6)))
    omega = int(rng.integers(0, params.w0))
    rc = reliability.RepeatedCollision(1.0 - (omega + omega ** 2) / params.w0 ** 2, 1.0 / params.w0, omega)
    chain = reliability.build_retrans_chain(random_breakdown(rng), params, rc)
    return params, chain


def run_retrans_suite(cases: int = 100, seed: int = 0) -> SuiteReport:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, where = 0.0, "-"
    for case in range(cases):
        params, chain = random_retrans_case(rng)
        n = params.mac_max_frame_retries
        err = max(abs(reliability.link_reliability(chain, n)
                      - reliability.reliability_by_enumeration(chain.matrix, n)),
                  float(np.max(np.abs(chain.matrix.sum(axis=1) - 1.0))))
        if err > worst:
            worst, where = err, f"case {case} (n={n})"
    return SuiteReport("retrans", cases, worst, RETRANS_TOL, where, time.perf_counter() - start)


SUITES = {
    "chain": run_chain_suite,
    "powerset": run_powerset_suite,
    "retrans": run_retrans_suite,
}
