import numpy as np
import pytest

from lrwpan.analog import RadioParams
from lrwpan.params import ProtocolParams, TrafficParams
from lrwpan.solver import Model
from lrwpan.topology import Node, build_links, build_topology, explicit_graph

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def explicit_nodes(n, gateway=0):
    return [Node(i, None, i == gateway) for i in range(n)]


def geometric(positions, gateway=0, radio=None):
    nodes = [Node(i, p, i == gateway) for i, p in enumerate(positions)]
    return build_topology(build_links(nodes, radio or RadioParams()))


def isolated_pair(per_packet=None, per_ack=None, ber=0.0):
    link = {"nodes": [0, 1], "ber": ber}
    if per_packet is not None:
        link.update(per_packet=per_packet, per_ack=per_ack)
    return build_topology(explicit_graph(explicit_nodes(2), [link], []))


def grid_positions(rows, cols, spacing):
    return [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)]


@pytest.fixture
def protocol():
    return ProtocolParams()


@pytest.fixture
def star_model():
    topo = geometric([(0.0, 0.0), (10.0, 0.0), (-10.0, 0.0)])
    return Model.build(topo, ProtocolParams(), TrafficParams(0.5, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
