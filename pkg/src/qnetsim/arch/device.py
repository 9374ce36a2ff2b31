"""The quantum device shell: fixed-function block wiring around a processor.

A device owns one processor (parser, ingress, egress, qcontrol, deparser),
its classical wires, an optional host agent on the CPU port, and the BSM
group store. Packet flow:

- classical packet in -> parse -> ingress -> either the classical egress
  path (standard_metadata.egress_spec selects the port, 511 drops) or, if
  ingress set xconnect pathway to qcontrol, a diversion into the qcontrol
  block as a cnetwork trigger;
- physical-layer events (heralding/swap outcomes) -> qcontrol with an empty
  header set, metadata carrying the outcome;
- qcontrol output: at most one of xconnect egress_spec (single emission) or
  bsm_grp (replication to the group's two entries, bsm_info stamped per
  copy); every emission runs egress then deparses independently. Emissions
  are dispatched before the returned operation executes so a release cannot
  outrun an application delivery. CPU-port emissions reach the host agent
  synchronously; wire emissions arrive after propagation delay.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from ..bmv2.ir import PipelineProgram
from ..fabric.engine import Engine
from ..fabric.physical import Fabric, QControlEvent
from ..runtime import ParseError, ProcessorState
from .metadata import (
    CPU_PORT,
    DROP_PORT,
    EVENT_TYPE_BY_KIND,
    EventType,
    Operation,
    Pathway,
    QCONTROL_METADATA,
    STANDARD_METADATA,
    XCONNECT_METADATA,
)


class DeviceConfigError(Exception):
    pass


class PortBusy(DeviceConfigError):
    pass


class NoFreeBsmUnit(DeviceConfigError):
    pass


class UnknownGroup(DeviceConfigError):
    pass


class ProtocolProgramError(Exception):
    """The loaded program used the architecture illegally (e.g. requested two
    emission mechanisms at once); deterministic simulations fail fast."""


class Role(str, Enum):
    END_NODE = "end_node"
    ROUTER = "router"
    HERALDING_HUB = "heralding_hub"


@dataclass(frozen=True)
class BsmGroup:
    bsm_id: int
    entry0: int
    entry1: int


class DeviceShell:
    def __init__(self, name: str, node_id: int, role: Role,
                 program: PipelineProgram, engine: Engine, fabric: Fabric,
                 bsm_units: int = 0):
        self.name = name
        self.node_id = node_id
        self.role = role
        self.engine = engine
        self.fabric = fabric
        self.processor = ProcessorState(program)
        self.wires: dict[int, tuple["DeviceShell", int, int]] = {}
        self.host_agent = None
        self.bsm_groups: dict[int, BsmGroup] = {}
        self._port_group: dict[int, int] = {}
        self.bsm_units_total = bsm_units
        self.bsm_units_free = bsm_units
        self._group_has_unit: set[int] = set()
        self.counters: Counter = Counter()
        fabric.attach_node(name, self.on_qcontrol_event)

    # -- wiring ----------------------------------------------------------------

    def connect(self, port: int, peer: "DeviceShell", peer_port: int, delay_ns: int):
        if port in self.wires:
            raise DeviceConfigError(f"{self.name} port {port} already wired")
        self.wires[port] = (peer, peer_port, delay_ns)

    def attach_host(self, agent):
        """agent.on_packet(bytes) receives every CPU-port emission."""
        self.host_agent = agent

    def inject_from_host(self, raw: bytes):
        """Host-originated packet; enters ingress on the CPU port next tick."""
        self.engine.schedule(0, lambda: self.on_classical_packet(CPU_PORT, raw))

    # -- BSM groups ---------------------------------------------------------------

    def install_bsm_group(self, group: BsmGroup):
        """Bind two ports to a group id; hubs also claim a physical unit and
        start generation, which runs until the group is removed."""
        if group.bsm_id in self.bsm_groups:
            raise DeviceConfigError(f"group {group.bsm_id} already installed")
        if group.entry0 == group.entry1:
            raise PortBusy(f"group entries must differ, got {group.entry0} twice")
        for port in (group.entry0, group.entry1):
            if port in self._port_group:
                raise PortBusy(
                    f"{self.name} port {port} already in group {self._port_group[port]}")
        claim_unit = self.role is Role.HERALDING_HUB
        if claim_unit:
            if self.bsm_units_free == 0:
                raise NoFreeBsmUnit(self.name)
            self.bsm_units_free -= 1
            self._group_has_unit.add(group.bsm_id)
        self.bsm_groups[group.bsm_id] = group
        self._port_group[group.entry0] = group.bsm_id
        self._port_group[group.entry1] = group.bsm_id
        self.engine.trace.record(self.engine.now, self.name, "grp+",
                                 f"{group.bsm_id}:{group.entry0},{group.entry1}")
        if claim_unit:
            self.fabric.start_generation(self.name, group.bsm_id,
                                         group.entry0, group.entry1)

    def remove_bsm_group(self, bsm_id: int):
        group = self.bsm_groups.pop(bsm_id, None)
        if group is None:
            raise UnknownGroup(f"{self.name} group {bsm_id}")
        del self._port_group[group.entry0]
        del self._port_group[group.entry1]
        if bsm_id in self._group_has_unit:
            self._group_has_unit.remove(bsm_id)
            self.fabric.stop_generation(self.name, bsm_id)
            self.bsm_units_free += 1
        self.engine.trace.record(self.engine.now, self.name, "grp-", str(bsm_id))

    # -- packet paths -----------------------------------------------------------

    def on_classical_packet(self, port: int, raw: bytes):
        proc = self.processor
        try:
            pkt = proc.parse(raw)
        except ParseError as exc:
            self.counters["parse_drop"] += 1
            self.engine.trace.record(self.engine.now, self.name, "parse_drop", str(exc))
            return
        pkt.set(STANDARD_METADATA, "ingress_port", port)
        pkt.set(XCONNECT_METADATA, "ingress_port", port)
        proc.execute_pipeline("ingress", pkt)
        if pkt.get(XCONNECT_METADATA, "pathway") == Pathway.QCONTROL:
            self.engine.trace.record(self.engine.now, self.name, "qdivert",
                                     f"port={port}")
            pkt.set(QCONTROL_METADATA, "event_type", EventType.CNETWORK)
            self._run_qcontrol(pkt)
            return
        if pkt.get(XCONNECT_METADATA, "bsm_grp"):
            raise ProtocolProgramError(
                f"{self.name}: ingress requested replication without diverting")
        spec = pkt.get(STANDARD_METADATA, "egress_spec")
        if spec == DROP_PORT:
            self.counters["ingress_drop"] += 1
            return
        if spec == 0:
            self.counters["no_route_drop"] += 1
            self.engine.trace.record(self.engine.now, self.name, "no_route",
                                     f"port={port}")
            return
        self._egress_and_emit(pkt, spec)

    def on_qcontrol_event(self, ev: QControlEvent):
        pkt = self.processor.new_packet()
        pkt.set(QCONTROL_METADATA, "event_type", int(EVENT_TYPE_BY_KIND[ev.kind]))
        pkt.set(QCONTROL_METADATA, "event_timestamp", ev.timestamp & (2**64 - 1))
        pkt.set(QCONTROL_METADATA, "bsm_id", ev.bsm_id)
        pkt.set(QCONTROL_METADATA, "bsm_success", int(ev.success))
        pkt.set(QCONTROL_METADATA, "bsm_bell_index", ev.bell_index)
        self._run_qcontrol(pkt)

    def _run_qcontrol(self, pkt):
        self.processor.execute_pipeline("qcontrol", pkt)
        eg = pkt.get(XCONNECT_METADATA, "egress_spec")
        grp = pkt.get(XCONNECT_METADATA, "bsm_grp")
        if eg and grp:
            raise ProtocolProgramError(
                f"{self.name}: qcontrol set both egress_spec and bsm_grp")
        if grp:
            group = self.bsm_groups.get(grp)
            if group is None:
                self.counters["unknown_group_drop"] += 1
                self.engine.trace.record(self.engine.now, self.name,
                                         "unknown_group", str(grp))
            else:
                self.counters["replications"] += 1
                for entry in (group.entry0, group.entry1):
                    copy = pkt.copy()
                    copy.set(XCONNECT_METADATA, "bsm_info", grp)
                    self._egress_and_emit(copy, entry)
        elif eg:
            if eg == DROP_PORT:
                self.counters["qcontrol_drop"] += 1
            else:
                self._egress_and_emit(pkt, eg)
        self._execute_operation(pkt)

    def _egress_and_emit(self, pkt, port: int):
        pkt.set(STANDARD_METADATA, "egress_port", port)
        self.processor.execute_pipeline("egress", pkt)
        if pkt.get(STANDARD_METADATA, "egress_spec") == DROP_PORT:
            self.counters["egress_drop"] += 1
            return
        raw = self.processor.deparse(pkt)
        self._transmit(port, raw)

    def _transmit(self, port: int, raw: bytes):
        if port == CPU_PORT:
            self.counters["to_host"] += 1
            self.engine.trace.record(self.engine.now, self.name, "host",
                                     raw.hex())
            if self.host_agent is not None:
                self.host_agent.on_packet(raw)
            return
        wire = self.wires.get(port)
        if wire is None:
            self.counters["no_wire_drop"] += 1
            self.engine.trace.record(self.engine.now, self.name, "no_wire",
                                     f"port={port}")
            return
        peer, peer_port, delay = wire
        self.counters["tx"] += 1
        self.engine.trace.record(self.engine.now, self.name, "tx",
                                 f"port={port} {raw.hex()}")
        self.engine.schedule(delay,
                             lambda: peer.on_classical_packet(peer_port, raw))

    def _execute_operation(self, pkt):
        op = pkt.get(QCONTROL_METADATA, "operation")
        if op == Operation.NONE:
            return
        if op == Operation.SWAP:
            self.fabric.swap_bsm(
                self.name,
                pkt.get(QCONTROL_METADATA, "swap_qubit_0"),
                pkt.get(QCONTROL_METADATA, "swap_qubit_1"),
                pkt.get(QCONTROL_METADATA, "swap_bsm_id"))
        elif op == Operation.RELEASE:
            self.fabric.release(self.name,
                                pkt.get(QCONTROL_METADATA, "release_qubit"))
        else:
            raise ProtocolProgramError(f"{self.name}: unknown operation {op}")
