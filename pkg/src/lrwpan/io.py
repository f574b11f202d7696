"""Experiment config loading, topology generation and solution export.

Config files are JSON objects with the sections ``radio``, ``protocol``,
``traffic``, ``topology`` and ``solver``. ``topology`` holds exactly one
source:

* ``nodes``: ``[{"id": 0, "x": 0.0, "y": 0.0}, ...]`` plus ``gateway``
* ``links``: explicit mode, ``node_count``, ``gateway``, ``links`` with
  ``{"nodes": [a, b], "ber": ..}`` and ``in_range`` as unordered pairs
* ``generator``: ``{"kind": "grid" | "uniform", "seed": .., ...}``
* ``file``: path of a topology file written by ``lrwpan generate``
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import topology as topo_mod
from .analog import RadioParams
from .params import InvalidParams, ProtocolParams, TrafficParams
from .solver import Model, ModelSolution, SolverConfig
from .topology import Node, Topology

TOPOLOGY_SCHEMA = "lrwpan.topology/1"
SOLUTION_SCHEMA = "lrwpan.solution/1"
SOURCES = ("nodes", "links", "generator", "file")


class ConfigError(ValueError):
    """Invalid experiment config; ``field`` is the dotted path of the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    radio: RadioParams = field(default_factory=RadioParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    topology: dict = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    base_dir: Path = Path(".")


def _section(cls, raw: dict | None, prefix: str, rename: dict | None = None):
    raw = dict(raw or {})
    rename = rename or {}
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        name = rename.get(key, key)
        if name not in known:
            raise ConfigError(f"{prefix}.{key}", "unknown field")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except InvalidParams as exc:
        raise ConfigError(f"{prefix}.{exc.field}", str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(prefix, str(exc)) from exc


def parse_config(raw: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(raw) - {"radio", "protocol", "traffic", "topology", "solver"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    solver_raw = dict(raw.get("solver") or {})
    if "LRWPAN_TOL" in os.environ:
        solver_raw["tol"] = float(os.environ["LRWPAN_TOL"])
    if "LRWPAN_MAX_ITER" in os.environ:
        solver_raw["max_iter"] = int(os.environ["LRWPAN_MAX_ITER"])
    topo = raw.get("topology")
    if not isinstance(topo, dict):
        raise ConfigError("topology", "section missing")
    present = [s for s in SOURCES if s in topo]
    if len(present) != 1:
        raise ConfigError("topology", f"exactly one source of {SOURCES} required, got {present}")
    return ExperimentConfig(
        radio=_section(RadioParams, raw.get("radio"), "radio"),
        protocol=_section(ProtocolParams, raw.get("protocol"), "protocol"),
        traffic=_section(TrafficParams, raw.get("traffic"), "traffic",
                         {"interval_up_s": "interval_up", "interval_down_s": "interval_down"}),
        topology=topo,
        solver=_section(SolverConfig, solver_raw, "solver"),
        base_dir=Path(base_dir),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return parse_config(raw, path.parent)


# -- topology generation -----------------------------------------------------

def _pick_gateway(positions: list[tuple[float, float]], choice, centre: tuple[float, float]) -> int:
    if isinstance(choice, int) and not isinstance(choice, bool):
        if not 0 <= choice < len(positions):
            raise ConfigError("topology.generator.gateway", f"node {choice} does not exist")
        return choice
    if choice == "center":
        return min(range(len(positions)), key=lambda i: (math.dist(positions[i], centre), i))
    if choice == "corner":
        return 0
    raise ConfigError("topology.generator.gateway", f"expected node id, 'center' or 'corner', got {choice!r}")


def generate_nodes(spec: dict, seed: int | None = None) -> list[Node]:
    """Deterministic node placement from a generator spec."""
    prefix = "topology.generator"
    seed = spec.get("seed") if seed is None else seed
    if seed is None:
        raise ConfigError(f"{prefix}.seed", "a seed is required for reproducible generation")
    kind = spec.get("kind")
    if kind == "grid":
        rows, cols = int(spec.get("rows", 0)), int(spec.get("cols", 0))
        spacing = float(spec.get("spacing_m", 0.0))
        if rows * cols < 2:
            raise ConfigError(prefix, f"grid {rows}x{cols} has fewer than 2 nodes")
        if not spacing > 0:
            raise ConfigError(f"{prefix}.spacing_m", "zero area: spacing must be positive")
        positions = [(c * spacing, r * spacing) for r in range(rows) for c in range(cols)]
        centre = ((cols - 1) * spacing / 2, (rows - 1) * spacing / 2)
        default_gw = "center"
    elif kind == "uniform":
        count = int(spec.get("count", 0))
        width, height = float(spec.get("width_m", 0.0)), float(spec.get("height_m", 0.0))
        if count < 2:
            raise ConfigError(f"{prefix}.count", f"need at least 2 nodes, got {count}")
        if not (width > 0 and height > 0):
            raise ConfigError(prefix, "zero area: width_m and height_m must be positive")
        rng = np.random.default_rng(int(seed))
        xy = rng.uniform((0.0, 0.0), (width, height), size=(count, 2))
        positions = [(float(x), float(y)) for x, y in xy]
        centre = (width / 2, height / 2)
        default_gw = "center"
    else:
        raise ConfigError(f"{prefix}.kind", f"expected 'grid' or 'uniform', got {kind!r}")
    gw = _pick_gateway(positions, spec.get("gateway", default_gw), centre)
    return [Node(i, pos, i == gw) for i, pos in enumerate(positions)]


def nodes_from_list(entries: list[dict], gateway: int) -> list[Node]:
    nodes = []
    for i, e in enumerate(sorted(entries, key=lambda e: int(e["id"]))):
        if int(e["id"]) != i:
            raise ConfigError("topology.nodes", "node ids must be dense 0..N-1")
        nodes.append(Node(i, (float(e["x"]), float(e["y"])), i == gateway))
    return nodes


def topology_document(nodes: list[Node]) -> dict:
    gw = next(n.id for n in nodes if n.is_gateway)
    return {
        "schema": TOPOLOGY_SCHEMA,
        "gateway": gw,
        "nodes": [{"id": n.id, "x": n.position[0], "y": n.position[1]} for n in nodes],
    }


def build_topology(cfg: ExperimentConfig, seed: int | None = None) -> Topology:
    src = cfg.topology
    try:
        if "file" in src:
            doc = json.loads((cfg.base_dir / src["file"]).read_text())
            if doc.get("schema") != TOPOLOGY_SCHEMA:
                raise ConfigError("topology.file", f"unsupported schema {doc.get('schema')!r}")
            src = {k: v for k, v in doc.items() if k != "schema"}
        if "generator" in src:
            graph = topo_mod.build_links(generate_nodes(src["generator"], seed), cfg.radio)
        elif "nodes" in src:
            graph = topo_mod.build_links(nodes_from_list(src["nodes"], int(src.get("gateway", 0))), cfg.radio)
        else:
            count = int(src.get("node_count", 0))
            gw = int(src.get("gateway", 0))
            nodes = [Node(i, None, i == gw) for i in range(count)]
            graph = topo_mod.explicit_graph(nodes, src["links"], src.get("in_range", []))
        return topo_mod.build_topology(graph, cfg.protocol)
    except topo_mod.TopologyError as exc:
        raise ConfigError("topology", str(exc)) from exc
    except (KeyError, TypeError) as exc:
        raise ConfigError("topology", f"malformed entry: {exc}") from exc


def build_model(cfg: ExperimentConfig, seed: int | None = None) -> Model:
    return Model.build(build_topology(cfg, seed), cfg.protocol, cfg.traffic)


# -- solution dump -------------------------------------------------------------

LINK_COLUMNS = ("id", "sender", "receiver", "direction", "ber", "per_packet", "per_ack",
                "rate", "p_send", "tau", "alpha", "p_noack", "reliability")
NODE_COLUMNS = ("id", "gateway", "parent", "depth", "descendants", "r_up", "r_down")


def solution_document(model: Model, sol: ModelSolution, cfg: SolverConfig) -> dict:
    topo = model.topology
    st = sol.state
    links = []
    for l in topo.links:
        i = l.id
        links.append({
            "id": i, "sender": l.sender, "receiver": l.receiver, "direction": l.direction,
            "ber": l.ber, "per_packet": l.per_packet, "per_ack": l.per_ack,
            "rate": float(st.rate[i]), "p_send": float(st.p_send[i]), "tau": float(st.tau[i]),
            "alpha": float(st.alpha[i]), "p_noack": float(st.p_noack[i]),
            "reliability": float(st.reliability[i]),
            "breakdown": sol.breakdowns[i].as_dict(),
        })
    tree = topo.tree
    nodes = [{
        "id": v, "gateway": v == tree.gateway, "parent": tree.parent[v],
        "depth": tree.depth[v], "descendants": tree.descendant_count[v],
        "r_up": float(sol.paths.r_up[v]), "r_down": float(sol.paths.r_down[v]),
    } for v in range(topo.size)]
    tm = model.timing
    return {
        "schema": SOLUTION_SCHEMA,
        "solver": {"converged": sol.converged, "iterations": sol.iterations,
                   "final_residual": float(sol.final_residual), "damping": sol.damping,
                   "tol": cfg.tol, "max_iter": cfg.max_iter},
        "timing": {"packet_units": tm.packet_units, "ack_units": tm.ack_units,
                   "success_units": tm.success_units, "fail_units": tm.fail_units,
                   "rate_up": tm.rate_up, "rate_down": tm.rate_down},
        "links": links,
        "nodes": nodes,
    }


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_solution(doc: dict, out: Path | str, fmt: str = "json") -> list[Path]:
    """Write the dump; CSV produces ``<stem>_links.csv`` and ``<stem>_nodes.csv``."""
    out = Path(out)
    if fmt == "json":
        out.write_text(json.dumps(doc, indent=1))
        return [out]
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    written = []
    for table, cols in (("links", LINK_COLUMNS), ("nodes", NODE_COLUMNS)):
        path = out.with_name(f"{out.stem}_{table}.csv")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for rec in doc[table]:
                w.writerow([_cell(rec[c]) for c in cols])
        written.append(path)
    return written
