import numpy as np
import pytest

from lrwpan.analog import RadioParams
from lrwpan.params import ProtocolParams, TrafficParams
from lrwpan.solver import (LinkState, Model, SolverConfig, pipeline_pass, residual, solve)

from conftest import geometric, grid_positions, isolated_pair

EXACT = SolverConfig(damping=1.0)


def _pair_model(**kw):
    return Model.build(isolated_pair(**kw), ProtocolParams(), TrafficParams(1.0, 1.0))


def test_isolated_error_free_link():
    sol = solve(_pair_model(), EXACT)
    assert sol.converged and sol.iterations <= 2
    st = sol.state
    assert np.all(st.alpha == 0) and np.all(st.p_noack == 0) and np.all(st.reliability == 1)
    assert sol.paths.r_up[1] == sol.paths.r_down[1] == 1.0


def test_isolated_lossy_link():
    sol = solve(_pair_model(per_packet=0.1, per_ack=0.01), EXACT)
    assert sol.converged and sol.iterations <= 2
    assert sol.state.p_noack == pytest.approx([0.109, 0.109], abs=1e-12)
    # (0,0) -> succ w.p. 0.9, -> (0,0) w.p. 0.1, four attempts
    assert sol.state.reliability == pytest.approx([1 - 0.1 ** 4] * 2, abs=1e-12)


def test_default_damping_still_converges_to_same_point():
    exact = solve(_pair_model(per_packet=0.1, per_ack=0.01), EXACT)
    damped = solve(_pair_model(per_packet=0.1, per_ack=0.01))
    assert damped.converged
    assert residual(exact.state, damped.state) < 1e-8


def test_symmetric_star(star_model):
    sol = solve(star_model)
    assert sol.converged
    topo = star_model.topology
    st = sol.state
    for group in ((topo.up_link[1], topo.up_link[2]), (topo.down_link[1], topo.down_link[2])):
        for arr in st.arrays():
            assert abs(arr[group[0]] - arr[group[1]]) <= 1e-9
    assert st.alpha.max() > 0  # the two clients do interact


def test_residual():
    x = LinkState(*(np.zeros(3) for _ in range(6)))
    assert residual(x, x.copy()) == 0.0
    y = x.copy()
    y.tau[1] = 0.5
    assert residual(x, y) == 0.5
    z = LinkState(*(np.zeros(2) for _ in range(6)))
    with pytest.raises(ValueError):
        residual(x, z)


def test_idempotent_at_fixed_point(star_model):
    cfg = SolverConfig()
    sol = solve(star_model, cfg)
    again = pipeline_pass(star_model, sol.state)
    assert residual(sol.state, again.state) <= cfg.tol


def test_deterministic(star_model):
    a = solve(star_model)
    b = solve(star_model)
    assert a.trace == b.trace
    for x, y in zip(a.state.arrays(), b.state.arrays()):
        assert np.array_equal(x, y)


def test_iterates_stay_probabilities():
    topo = geometric(grid_positions(3, 3, 30.0), gateway=4, radio=RadioParams(0, -95, -90))
    model = Model.build(topo, ProtocolParams(), TrafficParams(0.05, 0.05))
    x = model.initial_state(SolverConfig())
    for _ in range(30):
        new = pipeline_pass(model, x).state
        for name in ("p_send", "tau", "alpha", "p_noack", "reliability"):
            arr = getattr(new, name)
            assert np.all((arr >= 0) & (arr <= 1)), name
        assert np.all(new.rate >= 0)
        x = x.blend(new, 0.5)


def test_zero_traffic_limit():
    topo = geometric(grid_positions(2, 3, 30.0), radio=RadioParams(0, -95, -90))
    off = TrafficParams(up_enabled=False, down_enabled=False)
    sol = solve(Model.build(topo, ProtocolParams(), off))
    assert sol.converged
    assert np.all(sol.state.alpha == 0)
    for link in topo.links:
        pure = link.per_packet + (1 - link.per_packet) * link.per_ack
        assert sol.state.p_noack[link.id] == pytest.approx(pure, abs=1e-15)


def test_single_iteration_does_not_converge():
    topo = geometric(grid_positions(3, 3, 30.0), gateway=4, radio=RadioParams(0, -95, -90))
    sol = solve(Model.build(topo, ProtocolParams(), TrafficParams()), SolverConfig(max_iter=1))
    assert not sol.converged
    assert sol.iterations == 1
    assert sol.final_residual > 1e-9


def test_config_validation():
    for kw in ({"damping": 0.0}, {"damping": 1.5}, {"tol": 0.0}, {"max_iter": 0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
