"""Unslotted CSMA/CA Markov chain of a single link sender.

States are ``idle``, backoff states ``(i, k, j)`` (backoff stage i, k
units until CCA, j previous attempts), successful transmission states
``(-1, h, j)`` and colliding transmission states ``(-2, h, j)``.

:func:`closed_form` evaluates the stationary quantities analytically and
is what the solver uses. :func:`build_chain_oracle` constructs the full
transition matrix and solves it numerically; it exists to check the
closed form and is far too slow for the solver loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import DerivedTiming, ProtocolParams, backoff_window

GEO_EPS = 1e-9
ROW_SUM_TOL = 1e-12


def geometric_sum(x: float, n: int) -> float:
    """sum_{i=0}^{n-1} x**i."""
    if n < 0:
        raise ValueError(f"number of terms must be >= 0, got {n}")
    if abs(1.0 - x) > GEO_EPS:
        return (1.0 - x ** n) / (1.0 - x)
    return float(n)


@dataclass(frozen=True)
class ChainInputs:
    alpha: float
    p_noack: float
    p_send: float
    params: ProtocolParams
    success_units: float
    fail_units: float

    def __post_init__(self):
        for name in ("alpha", "p_noack", "p_send"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @classmethod
    def from_timing(cls, alpha: float, p_noack: float, p_send: float,
                    timing: DerivedTiming) -> "ChainInputs":
        return cls(alpha, p_noack, p_send, timing.protocol,
                   timing.success_units, timing.fail_units)

    def integerized(self) -> "ChainInputs":
        """Copy with dwell times rounded to whole time units (half up, at least 1)."""
        return ChainInputs(self.alpha, self.p_noack, self.p_send, self.params,
                           float(max(1, math.floor(self.success_units + 0.5))),
                           float(max(1, math.floor(self.fail_units + 0.5))))


@dataclass(frozen=True)
class ChainOutputs:
    y: float
    b000: float
    tau: float
    idle: float


def closed_form(inp: ChainInputs) -> ChainOutputs:
    p = inp.params
    a, pn, ps = inp.alpha, inp.p_noack, inp.p_send
    m, n = p.mac_max_csma_backoffs, p.mac_max_frame_retries
    mbar = p.backoff_stages_capped
    access = 1.0 - a ** (m + 1)   # probability the CCA eventually succeeds
    y = pn * access
    if ps <= 0.0:
        return ChainOutputs(y=y, b000=0.0, tau=0.0, idle=1.0)

    geo_y = geometric_sum(y, n + 1)
    mm = min(m, mbar)
    backoff = 0.5 * geo_y * (
        p.w0 * geometric_sum(2.0 * a, mm + 1)
        + geometric_sum(a, mm + 1)
        + (2 ** p.mac_max_be + 1) * a ** (mbar + 1) * geometric_sum(a, max(0, m - mbar)))
    transmit = access * geo_y * (inp.success_units * (1.0 - pn) + inp.fail_units * pn)
    idle_rel = (y ** (n + 1) + geo_y * (a ** (m + 1) + (1.0 - pn) * access)) / ps
    b000 = 1.0 / (backoff + transmit + idle_rel)
    tau = b000 * geometric_sum(a, m + 1) * geo_y
    return ChainOutputs(y=y, b000=b000, tau=tau, idle=b000 * idle_rel)


def stationary_probability(inp: ChainInputs, i: int, k: int, j: int,
                           out: ChainOutputs | None = None) -> float:
    """Closed-form stationary probability of backoff state (i, k, j)."""
    p = inp.params
    if not 0 <= i <= p.mac_max_csma_backoffs:
        raise IndexError(f"backoff stage {i} out of range")
    if not 0 <= j <= p.mac_max_frame_retries:
        raise IndexError(f"attempt {j} out of range")
    w = backoff_window(p, i)
    if not 0 <= k < w:
        raise IndexError(f"counter {k} outside [0, {w})")
    out = out or closed_form(inp)
    return out.b000 * out.y ** j * inp.alpha ** i * (w - k) / w


def closed_form_total_mass(inp: ChainInputs) -> float:
    """Sum of the closed-form distribution over every state, term by term."""
    p = inp.params
    out = closed_form(inp)
    if inp.p_send <= 0.0:
        return out.idle
    m, n = p.mac_max_csma_backoffs, p.mac_max_frame_retries
    access = 1.0 - inp.alpha ** (m + 1)
    total = []
    for j in range(n + 1):
        for i in range(m + 1):
            w = backoff_window(p, i)
            total.extend(stationary_probability(inp, i, k, j, out) for k in range(w))
        total.append(inp.success_units * (1.0 - inp.p_noack) * out.b000 * out.y ** j * access)
        total.append(inp.fail_units * inp.p_noack * out.b000 * out.y ** j * access)
    total.append(out.idle)
    return math.fsum(total)


@dataclass
class ChainOracle:
    states: list[tuple]
    index: dict[tuple, int]
    matrix: sp.csr_matrix
    pi: np.ndarray

    def prob(self, state) -> float:
        return float(self.pi[self.index[state]])

    @property
    def idle(self) -> float:
        return self.prob("idle")

    def tau(self, params: ProtocolParams) -> float:
        return math.fsum(self.prob((i, 0, j))
                         for i in range(params.mac_max_csma_backoffs + 1)
                         for j in range(params.mac_max_frame_retries + 1))


class ChainConsistencyError(RuntimeError):
    pass


def build_chain_oracle(inp: ChainInputs) -> ChainOracle:
    """Enumerate the chain state by state and solve pi P = pi, sum(pi) = 1."""
    p = inp.params
    m, n = p.mac_max_csma_backoffs, p.mac_max_frame_retries
    ls = int(inp.success_units)
    lc = int(inp.fail_units)
    if ls != inp.success_units or lc != inp.fail_units or ls < 1 or lc < 1:
        raise ValueError("oracle needs positive integer dwell times; use ChainInputs.integerized()")
    a, pn, ps = inp.alpha, inp.p_noack, inp.p_send
    windows = [backoff_window(p, i) for i in range(m + 1)]

    states: list = ["idle"]
    for j in range(n + 1):
        for i in range(m + 1):
            states.extend((i, k, j) for k in range(windows[i]))
        states.extend((-1, h, j) for h in range(ls))
        states.extend((-2, h, j) for h in range(lc))
    index = {s: x for x, s in enumerate(states)}

    rows, cols, vals = [], [], []

    def add(src, dst, prob):
        if prob != 0.0:
            rows.append(index[src])
            cols.append(index[dst])
            vals.append(prob)

    def enter_backoff(src, i, j, prob):
        for k in range(windows[i]):
            add(src, (i, k, j), prob / windows[i])

    add("idle", "idle", 1.0 - ps)
    enter_backoff("idle", 0, 0, ps)
    for j in range(n + 1):
        for i in range(m + 1):
            for k in range(1, windows[i]):
                add((i, k, j), (i, k - 1, j), 1.0)
            if i < m:
                enter_backoff((i, 0, j), i + 1, j, a)
            else:
                add((i, 0, j), "idle", a)
            add((i, 0, j), (-2, 0, j), (1.0 - a) * pn)
            add((i, 0, j), (-1, 0, j), (1.0 - a) * (1.0 - pn))
        for h in range(ls - 1):
            add((-1, h, j), (-1, h + 1, j), 1.0)
        add((-1, ls - 1, j), "idle", 1.0)
        for h in range(lc - 1):
            add((-2, h, j), (-2, h + 1, j), 1.0)
        if j < n:
            enter_backoff((-2, lc - 1, j), 0, j + 1, 1.0)
        else:
            add((-2, lc - 1, j), "idle", 1.0)

    size = len(states)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    row_sums = np.asarray(P.sum(axis=1)).ravel()
    worst = int(np.argmax(np.abs(row_sums - 1.0)))
    if abs(row_sums[worst] - 1.0) > ROW_SUM_TOL:
        raise ChainConsistencyError(
            f"row of state {states[worst]} sums to {row_sums[worst]!r}")

    # pi (P - I) = 0 with the last balance equation replaced by normalisation
    A = (P.T - sp.identity(size, format="csr")).tolil()
    A[size - 1, :] = np.ones(size)
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    pi = spla.spsolve(A.tocsc(), rhs)
    return ChainOracle(states, index, P, pi)
