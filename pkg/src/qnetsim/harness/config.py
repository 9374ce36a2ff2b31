"""Experiment configuration files (JSON) -> validated spec objects."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..fabric import PhysicsParams
from .demand import DemandSpec, InvalidDemand
from .topology import InvalidTopology, LinkSpec, NodeSpec, TopologySpec


class ConfigError(Exception):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message} (at {path})" if path else message)


_PHYSICS_KEYS = {
    "attenuation_db_per_km": float,
    "propagation_speed_m_per_s": float,
    "t_prep_ns": int,
    "optical_bsm_success_factor": float,
    "optical_bsm_bell_states": str,
    "detector_efficiency": float,
    "swap_duration_ns": int,
    "swap_success_prob": float,
}

_DEMAND_KEYS = {
    "rate_per_s": float,
    "pairs_per_request": int,
    "duration_s": float,
    "window_s": list,
    "repetitions": int,
    "base_seed": int,
}


@dataclass
class SimConfig:
    topology: TopologySpec
    physics: PhysicsParams
    demand: DemandSpec
    sweep_units: list[int] | None = None
    sweep_rates: list[float] | None = None

    def with_units(self, units: int) -> TopologySpec:
        """Topology with every hub's BSM unit count replaced (sweep axis)."""
        nodes = [NodeSpec(n.name, n.role, units if n.role == "heralding_hub" else 0)
                 for n in self.topology.nodes]
        return TopologySpec(nodes, list(self.topology.links))


def _expect(obj, key, types, path, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required key '{key}'", path)
        return default
    value = obj[key]
    if types is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, types) or isinstance(value, bool) and types is not bool:
        raise ConfigError(f"'{key}' has wrong type {type(value).__name__}",
                          f"{path}/{key}")
    return value


def parse_config(doc: dict) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be an object", "/")
    for key in doc:
        if key not in ("topology", "physics", "demand", "sweep"):
            raise ConfigError(f"unknown section '{key}'", f"/{key}")

    topo_doc = _expect(doc, "topology", dict, "/", required=True)
    nodes = []
    for i, n in enumerate(_expect(topo_doc, "nodes", list, "/topology", required=True)):
        p = f"/topology/nodes/{i}"
        if not isinstance(n, dict):
            raise ConfigError("node must be an object", p)
        nodes.append(NodeSpec(
            _expect(n, "name", str, p, required=True),
            _expect(n, "role", str, p, required=True),
            _expect(n, "bsm_units", int, p, default=0)))
    links = []
    for i, l in enumerate(_expect(topo_doc, "links", list, "/topology", required=True)):
        p = f"/topology/links/{i}"
        if not isinstance(l, dict):
            raise ConfigError("link must be an object", p)
        links.append(LinkSpec(
            _expect(l, "a", str, p, required=True),
            _expect(l, "b", str, p, required=True),
            _expect(l, "length_km", float, p, default=5.0)))
    topology = TopologySpec(nodes, links)
    try:
        topology.validate()
    except InvalidTopology as exc:
        raise ConfigError(str(exc), "/topology") from None

    phys_doc = _expect(doc, "physics", dict, "/", default={})
    for key in phys_doc:
        if key not in _PHYSICS_KEYS:
            raise ConfigError(f"unknown physics key '{key}'", f"/physics/{key}")
    physics = PhysicsParams(**{
        key: _expect(phys_doc, key, _PHYSICS_KEYS[key], "/physics")
        for key in phys_doc})
    if physics.optical_bsm_bell_states not in ("psi", "all"):
        raise ConfigError("optical_bsm_bell_states must be 'psi' or 'all'",
                          "/physics/optical_bsm_bell_states")

    demand_doc = _expect(doc, "demand", dict, "/", required=True)
    for key in demand_doc:
        if key not in _DEMAND_KEYS:
            raise ConfigError(f"unknown demand key '{key}'", f"/demand/{key}")
    kwargs = {key: _expect(demand_doc, key, _DEMAND_KEYS[key], "/demand")
              for key in demand_doc}
    if "window_s" in kwargs:
        window = kwargs["window_s"]
        if len(window) != 2:
            raise ConfigError("window_s must be [start, end]", "/demand/window_s")
        kwargs["window_s"] = (float(window[0]), float(window[1]))
    if "rate_per_s" not in kwargs:
        raise ConfigError("missing required key 'rate_per_s'", "/demand")
    demand = DemandSpec(**kwargs)
    try:
        demand.validate()
    except InvalidDemand as exc:
        raise ConfigError(str(exc), "/demand") from None

    sweep_doc = _expect(doc, "sweep", dict, "/", default={})
    for key in sweep_doc:
        if key not in ("bsm_units", "rate_per_s"):
            raise ConfigError(f"unknown sweep key '{key}'", f"/sweep/{key}")
    sweep_units = sweep_doc.get("bsm_units")
    sweep_rates = sweep_doc.get("rate_per_s")
    if sweep_units is not None and (
            not isinstance(sweep_units, list) or not sweep_units
            or not all(isinstance(u, int) and u >= 1 for u in sweep_units)):
        raise ConfigError("bsm_units must be a non-empty list of positive ints",
                          "/sweep/bsm_units")
    if sweep_rates is not None and (
            not isinstance(sweep_rates, list) or not sweep_rates
            or not all(isinstance(r, (int, float)) and r >= 0 for r in sweep_rates)):
        raise ConfigError("rate_per_s must be a non-empty list of rates",
                          "/sweep/rate_per_s")

    return SimConfig(topology, physics, demand,
                     sweep_units, [float(r) for r in sweep_rates] if sweep_rates else None)


def load_config(path) -> SimConfig:
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(doc)


def hub_and_spoke_config(n_end_nodes: int = 16, units: int = 4,
                         rate_per_s: float = 50.0, **demand_kwargs) -> SimConfig:
    """The evaluation topology: end nodes on 5 km spokes around one hub."""
    nodes = [NodeSpec(f"n{i:02d}", "end_node") for i in range(1, n_end_nodes + 1)]
    nodes.append(NodeSpec("hub", "heralding_hub", units))
    links = [LinkSpec(f"n{i:02d}", "hub", 5.0) for i in range(1, n_end_nodes + 1)]
    demand = DemandSpec(rate_per_s=rate_per_s, **demand_kwargs)
    demand.validate()
    return SimConfig(TopologySpec(nodes, links), PhysicsParams(), demand)
