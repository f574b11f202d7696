"""One test per acceptance criterion; each records a PASS/FAIL line in the terminal summary."""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from lrwpan import io, validation
from lrwpan.csma import closed_form_total_mass
from lrwpan.reliability import link_reliability, reliability_by_enumeration
from lrwpan.params import ProtocolParams, TrafficParams, derive_timing
from lrwpan.solver import Model, SolverConfig, pipeline_pass, residual, solve
from lrwpan.topology import UP
from lrwpan.traffic import distribute_traffic, split_fractions

from conftest import ACCEPTANCE_LINES, isolated_pair
from test_traffic import random_tree

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_1_chain_closed_form_matches_stationary_solve():
    report = validation.run_chain_suite()
    ok = report.cases >= 400 and report.passed and report.seconds < 60
    assert record(1, ok, report.line()), report.line()


def test_2_product_form_matches_powerset():
    report = validation.run_powerset_suite(draws=1000, max_size=10)
    ok = report.passed and report.seconds < 10
    assert record(2, ok, report.line()), report.line()


def test_3_retransmission_chain_matches_enumeration():
    rng = np.random.default_rng(0)
    worst_r = worst_row = 0.0
    max_n = 0
    for _ in range(100):
        params, chain = validation.random_retrans_case(rng)
        n = params.mac_max_frame_retries
        max_n = max(max_n, n)
        worst_r = max(worst_r, abs(link_reliability(chain, n) - reliability_by_enumeration(chain.matrix, n)))
        worst_row = max(worst_row, float(np.max(np.abs(chain.matrix.sum(axis=1) - 1.0))))
    ok = worst_r <= 1e-12 and worst_row <= 1e-12 and max_n <= 5
    assert record(3, ok, f"100 cases, n <= {max_n}, max |R diff| {worst_r:.3e}, "
                         f"max row defect {worst_row:.3e} (tol 1e-12)")


def test_4_closed_form_mass_is_one():
    worst, cases = 0.0, 0
    for inp in validation.chain_grid():
        cases += 1
        worst = max(worst, abs(closed_form_total_mass(inp) - 1.0))
    assert record(4, worst <= 1e-9, f"{cases} grid points, max |mass - 1| {worst:.3e} (tol 1e-9)")


def test_5_isolated_link_closed_form():
    model = Model.build(isolated_pair(per_packet=0.1, per_ack=0.01), ProtocolParams(), TrafficParams(1.0, 1.0))
    sol = solve(model, SolverConfig(damping=1.0))
    err = float(np.max(np.abs(sol.state.p_noack - 0.109)))
    ok = sol.converged and sol.iterations <= 2 and err <= 1e-12
    assert record(5, ok, f"p_noack error {err:.3e} (tol 1e-12), {sol.iterations} iterations "
                         f"with undamped updates")


def test_6_flow_conservation():
    worst_up = worst_split = 0.0
    trees = 0
    for seed in range(20):
        for n in (2, 5, 17, 50, 100):
            topo = random_tree(seed, n)
            tm = derive_timing(ProtocolParams(), TrafficParams(0.8, 1.7), n)
            fs = distribute_traffic(topo, tm, np.ones(len(topo.links)))
            at_gw = sum(fs.rate[l.id] for l in topo.links
                        if l.direction == UP and l.receiver == topo.gateway)
            worst_up = max(worst_up, abs(at_gw - (n - 1) * tm.rate_up) / ((n - 1) * tm.rate_up))
            for total in split_fractions(topo).values():
                worst_split = max(worst_split, abs(total - 1.0))
            trees += 1
    ok = worst_up <= 1e-12 and worst_split <= 1e-12
    assert record(6, ok, f"{trees} random trees, N <= 100, max relative gateway error {worst_up:.3e}, "
                         f"max split-sum error {worst_split:.3e} (tol 1e-12)")


def test_7_symmetric_star(star_model):
    cfg = SolverConfig()
    sol = solve(star_model, cfg)
    topo = star_model.topology
    worst = 0.0
    for a, b in ((topo.up_link[1], topo.up_link[2]), (topo.down_link[1], topo.down_link[2])):
        for arr in sol.state.arrays():
            worst = max(worst, abs(arr[a] - arr[b]))
    ok = sol.converged and worst <= cfg.tol
    assert record(7, ok, f"max pairwise difference {worst:.3e} (tol {cfg.tol:.0e}), "
                         f"{sol.iterations} iterations")


def _models(star):
    yield "star", star
    for name in ("grid7x7", "random25", "isolated_pair"):
        cfg = io.load_config(CONFIGS / f"{name}.json")
        yield name, io.build_model(cfg)


def test_8_idempotence(star_model):
    cfg = SolverConfig()
    parts, ok = [], True
    for name, model in _models(star_model):
        sol = solve(model, cfg)
        change = residual(sol.state, pipeline_pass(model, sol.state).state)
        ok &= sol.converged and change <= cfg.tol
        parts.append(f"{name} {change:.1e}")
    assert record(8, ok, f"one more pass changes at most: {', '.join(parts)} (tol {cfg.tol:.0e})")


def _probabilities(doc):
    for link in doc["links"]:
        for key in ("ber", "per_packet", "per_ack", "p_send", "tau", "alpha", "p_noack", "reliability"):
            yield link[key]
        for key, value in link["breakdown"].items():
            yield from (value if isinstance(value, list) else [value])
    for node in doc["nodes"]:
        yield node["r_up"]
        yield node["r_down"]


def test_9_grid_end_to_end(tmp_path):
    out = tmp_path / "grid.json"
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "lrwpan", "solve", "--config",
                           str(CONFIGS / "grid7x7.json"), "--out", str(out)],
                          capture_output=True, text=True, timeout=120)
    seconds = time.perf_counter() - start
    doc = json.loads(out.read_text()) if out.exists() else {"links": [], "nodes": []}
    probs = np.array(list(_probabilities(doc)), dtype=float)
    in_range = bool(probs.size) and bool(np.all((probs >= 0.0) & (probs <= 1.0)))
    nodes = {n["id"]: n for n in doc["nodes"]}
    monotone = all(n["r_up"] <= nodes[n["parent"]]["r_up"] and n["r_down"] <= nodes[n["parent"]]["r_down"]
                   for n in nodes.values() if n["parent"] is not None)
    ok = proc.returncode == 0 and seconds < 60 and len(nodes) == 49 and in_range and monotone
    assert record(9, ok, f"exit {proc.returncode} in {seconds:.1f} s, {len(nodes)} nodes, "
                         f"{probs.size} probabilities in [0,1]: {in_range}, "
                         f"path reliabilities non-increasing with depth: {monotone}"), proc.stderr
