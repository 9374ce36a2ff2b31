"""Topology specification and network instantiation.

Builds devices with their role's protocol program, wires classical channels
and quantum fibres, attaches host agents, installs bootstrap routing (node-id
routes for REQUEST/COMPLETE envelopes; the controller is node id 0 at the
first hub), and places the controller.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..arch.device import DeviceShell, Role
from ..arch.metadata import CPU_PORT
from ..control import Controller
from ..fabric import Engine, Fabric, PhysicsParams
from ..protocols.host import NodeAgent
from ..protocols.programs import MAX_ROUTER_PORTS, endnode_program, hub_program, router_program


class InvalidTopology(Exception):
    pass


@dataclass(frozen=True)
class NodeSpec:
    name: str
    role: str  # end_node | router | heralding_hub
    bsm_units: int = 0


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    length_km: float = 5.0


@dataclass
class TopologySpec:
    nodes: list[NodeSpec]
    links: list[LinkSpec]

    def validate(self):
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidTopology("duplicate node names")
        roles = {n.name: n.role for n in self.nodes}
        for n in self.nodes:
            if n.role not in ("end_node", "router", "heralding_hub"):
                raise InvalidTopology(f"node '{n.name}' has unknown role '{n.role}'")
            if n.role == "heralding_hub" and n.bsm_units < 1:
                raise InvalidTopology(f"hub '{n.name}' needs at least one BSM unit")
        if not any(n.role == "heralding_hub" for n in self.nodes):
            raise InvalidTopology("topology has no heralding hub")
        adj: dict[str, list[str]] = {n.name: [] for n in self.nodes}
        for link in self.links:
            for end in (link.a, link.b):
                if end not in roles:
                    raise InvalidTopology(f"link references unknown node '{end}'")
            if link.a == link.b:
                raise InvalidTopology(f"self-link at '{link.a}'")
            if link.length_km <= 0:
                raise InvalidTopology(f"link {link.a}-{link.b} has non-positive length")
            # every fibre joins a heralding hub to a memory-holding node:
            # entanglement segments always run between memories via a hub
            hub_ends = sum(roles[end] == "heralding_hub" for end in (link.a, link.b))
            if hub_ends != 1:
                raise InvalidTopology(
                    f"link {link.a}-{link.b} must connect a hub to an end node or router")
            adj[link.a].append(link.b)
            adj[link.b].append(link.a)
        # connectivity
        if self.nodes:
            seen = set()
            frontier = deque([self.nodes[0].name])
            while frontier:
                cur = frontier.popleft()
                if cur in seen:
                    continue
                seen.add(cur)
                frontier.extend(adj[cur])
            if seen != set(adj):
                raise InvalidTopology(f"topology not connected: {sorted(set(adj) - seen)}")
        for n in self.nodes:
            if n.role == "end_node" and len(adj[n.name]) != 1:
                raise InvalidTopology(
                    f"end node '{n.name}' must have exactly one fibre, has {len(adj[n.name])}")
            if n.role == "router" and len(adj[n.name]) >= MAX_ROUTER_PORTS:
                raise InvalidTopology(f"router '{n.name}' has too many ports")


class Network:
    """One instantiated simulation: engine, fabric, devices, agents, controller."""

    def __init__(self, spec: TopologySpec, physics: PhysicsParams, seed: int,
                 keep_trace_lines: bool = False):
        spec.validate()
        self.spec = spec
        self.physics = physics
        self.seed = seed
        self.engine = Engine(keep_trace_lines=keep_trace_lines)
        self.fabric = Fabric(self.engine, physics, seed)
        self.devices: dict[str, DeviceShell] = {}
        self.agents: dict[str, NodeAgent] = {}
        self.node_ids: dict[str, int] = {}
        self._names: dict[int, str] = {}
        self._adj: dict[str, list[str]] = {}
        self._ports: dict[tuple[str, str], int] = {}
        self._link_delay: dict[frozenset, int] = {}
        self._paths: dict[tuple[str, str], list[str]] = {}

        programs = {"end_node": endnode_program(), "router": router_program(),
                    "heralding_hub": hub_program()}
        next_id = 1
        for node in spec.nodes:
            if node.role == "end_node":
                self.node_ids[node.name] = next_id
                self._names[next_id] = node.name
                next_id += 1
        for node in spec.nodes:
            if node.role != "end_node":
                self.node_ids[node.name] = next_id
                self._names[next_id] = node.name
                next_id += 1
        for node in spec.nodes:
            role = Role(node.role)
            self.devices[node.name] = DeviceShell(
                node.name, self.node_ids[node.name], role, programs[node.role],
                self.engine, self.fabric,
                bsm_units=node.bsm_units if role is Role.HERALDING_HUB else 0)
            self._adj[node.name] = []

        port_counter = {n.name: 0 for n in spec.nodes}
        for link in spec.links:
            port_counter[link.a] += 1
            port_counter[link.b] += 1
            pa, pb = port_counter[link.a], port_counter[link.b]
            delay = physics.fibre_delay_ns(link.length_km)
            self.devices[link.a].connect(pa, self.devices[link.b], pb, delay)
            self.devices[link.b].connect(pb, self.devices[link.a], pa, delay)
            self.fabric.register_fibre(link.a, pa, link.b, pb, link.length_km)
            self._ports[(link.a, link.b)] = pa
            self._ports[(link.b, link.a)] = pb
            self._adj[link.a].append(link.b)
            self._adj[link.b].append(link.a)
            self._link_delay[frozenset((link.a, link.b))] = delay

        self.end_nodes = [n.name for n in spec.nodes if n.role == "end_node"]
        self.controller_hub = next(n.name for n in spec.nodes
                                   if n.role == "heralding_hub")
        for name in self.end_nodes:
            uplink = self._ports[(name, self._adj[name][0])]
            self.agents[name] = NodeAgent(self.devices[name], uplink)

        self._install_bootstrap_routes()
        self.controller = Controller(self)

    # -- lookups -----------------------------------------------------------

    def name_of(self, node_id: int) -> str:
        return self._names[node_id]

    def port(self, a: str, b: str) -> int:
        return self._ports[(a, b)]

    def path(self, a: str, b: str) -> list[str]:
        """Hop-shortest path (unique in the tested tree topologies)."""
        cached = self._paths.get((a, b))
        if cached is not None:
            return cached
        prev: dict[str, str] = {a: a}
        frontier = deque([a])
        while frontier:
            cur = frontier.popleft()
            if cur == b:
                break
            for nxt in self._adj[cur]:
                if nxt not in prev:
                    prev[nxt] = cur
                    frontier.append(nxt)
        if b not in prev:
            raise InvalidTopology(f"no path {a} -> {b}")
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        path.reverse()
        self._paths[(a, b)] = path
        return path

    def delay(self, a: str, b: str) -> int:
        path = self.path(a, b)
        return sum(self._link_delay[frozenset((path[i], path[i + 1]))]
                   for i in range(len(path) - 1))

    # -- bootstrap provisioning --------------------------------------------

    def _install_bootstrap_routes(self):
        """Static node-id routes for REQUEST/COMPLETE envelopes (id 0 is the
        controller at its hub). Provisioning happens at build time, before the
        clock starts; per-request state always travels as config messages."""
        targets = [(0, self.controller_hub)] + [
            (self.node_ids[n], n) for n in self.end_nodes]
        for name, dev in self.devices.items():
            for node_id, target in targets:
                if name == target:
                    dev.processor.table_insert("t_route", (node_id,), "forward",
                                               (CPU_PORT,))
                else:
                    path = self.path(name, target)
                    dev.processor.table_insert("t_route", (node_id,), "forward",
                                               (self.port(name, path[1]),))

    # -- convenience ----------------------------------------------------------

    def request(self, src: str, dst: str, num_pairs: int) -> int:
        return self.agents[src].request(self.node_ids[dst], num_pairs)

    def all_deliveries(self):
        out = []
        for agent in self.agents.values():
            out.extend(agent.deliveries)
        return out


def build_network(spec: TopologySpec, physics: PhysicsParams | None = None,
                  seed: int = 0, keep_trace_lines: bool = False) -> Network:
    return Network(spec, physics or PhysicsParams(), seed, keep_trace_lines)
