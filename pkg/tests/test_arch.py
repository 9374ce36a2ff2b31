"""Device shell behavior: path exclusivity, replication, groups, drops."""

import pytest

from qnetsim.arch import (
    BsmGroup,
    CPU_PORT,
    DeviceShell,
    NoFreeBsmUnit,
    PortBusy,
    ProtocolProgramError,
    Role,
    UnknownGroup,
    enum_declarations,
)
from qnetsim.bmv2.builder import C, EQ, F, ProgramBuilder
from qnetsim.fabric import Engine, Fabric, PhysicsParams, QControlEvent


def build_program():
    """Program exercising every shell path: forward, drop, divert, event
    multicast, per-copy egress rewrite keyed on bsm_info, and the illegal
    double-emission case (dynamic, so it passes static validation)."""
    b = ProgramBuilder(target="v1quantum")
    b.declare_target_metadata()
    for name, members in enum_declarations().items():
        b.enum(name, members)
    b.header_type("h_t", [("kind", 8), ("x", 16)])
    b.header("h", "h_t")
    b.parser().state("start", extracts=["h"])
    b.deparser("deparser", ["h"])

    from qnetsim.bmv2.builder import RT
    b.action("nop")
    b.action("fwd", params=[("port", 9)]).assign(
        ("standard_metadata", "egress_spec"), RT(0))
    b.action("divert").assign(("xconnect_metadata", "pathway"), C(1))
    b.action("to_drop").assign(("standard_metadata", "egress_spec"), C(511))

    # qcontrol: cnetwork bounces out the ingress port; heralding multicasts a
    # freshly built header via the event's group id; "both" is the illegal case.
    b.action("q_bounce").assign(
        ("xconnect_metadata", "egress_spec"), F("xconnect_metadata", "ingress_port"))
    b.action("q_mcast").add_header("h") \
        .assign(("h", "kind"), C(0xEE)) \
        .assign(("h", "x"), C(0)) \
        .assign(("xconnect_metadata", "bsm_grp"), F("qcontrol_metadata", "bsm_id"))
    b.action("q_both").assign(
        ("xconnect_metadata", "egress_spec"), F("xconnect_metadata", "ingress_port")) \
        .assign(("xconnect_metadata", "bsm_grp"), C(5))
    b.action("stamp_port").assign(("h", "x"), F("standard_metadata", "egress_port"))

    ig = b.pipeline("ingress", init="ti")
    ti = ig.table("ti", key=[("h", "kind")],
                  actions=["fwd", "divert", "to_drop", "nop"], default="nop",
                  next_tables={"fwd": None, "divert": None, "to_drop": None, "nop": None})
    ti.const_entry([1], "fwd", [3])
    ti.const_entry([2], "divert", [])
    ti.const_entry([3], "to_drop", [])
    ti.const_entry([4], "divert", [])  # divert path for the q_both case

    qc = b.pipeline("qcontrol", init="tq")
    tq = qc.table("tq", key=[("qcontrol_metadata", "event_type"), ("h", "kind")],
                  actions=["q_bounce", "q_mcast", "q_both", "nop"], default="nop",
                  next_tables={"q_bounce": None, "q_mcast": None, "q_both": None,
                               "nop": None})
    eg = b.pipeline("egress", init="te")
    te = eg.table("te", key=[("xconnect_metadata", "bsm_info")],
                  actions=["stamp_port", "nop"], default="nop",
                  next_tables={"stamp_port": None, "nop": None})
    te.const_entry([5], "stamp_port", [])
    return b, tq


def finished_program():
    b, tq = build_program()
    # Rebuild qcontrol dispatch properly: conditional on event_type.
    qcp = next(p for p in b._pipelines if p.name == "qcontrol")
    qcp._tables = []
    qcp._conds = []
    qcp.init = "c_ev"
    qcp.conditional("c_ev", EQ(F("qcontrol_metadata", "event_type"), C(2)),
                    true_next="t_net", false_next="t_ev")
    tnet = qcp.table("t_net", key=[("h", "kind")],
                     actions=["q_bounce", "q_both", "nop"], default="nop",
                     next_tables={"q_bounce": None, "q_both": None, "nop": None})
    tnet.const_entry([2], "q_bounce", [])
    tnet.const_entry([4], "q_both", [])
    tev = qcp.table("t_ev", key=[("qcontrol_metadata", "event_type")],
                    actions=["q_mcast", "nop"], default="nop",
                    next_tables={"q_mcast": None, "nop": None})
    tev.const_entry([0], "q_mcast", [])
    return b.build()


class HostStub:
    def __init__(self):
        self.packets = []

    def on_packet(self, raw):
        self.packets.append(raw)


def rig(units=2):
    engine = Engine(keep_trace_lines=True)
    fabric = Fabric(engine, PhysicsParams(), 99)
    prog = finished_program()
    hub = DeviceShell("hub", 10, Role.HERALDING_HUB, prog, engine, fabric,
                      bsm_units=units)
    alice = DeviceShell("alice", 1, Role.END_NODE, prog, engine, fabric)
    bob = DeviceShell("bob", 2, Role.END_NODE, prog, engine, fabric)
    hub.connect(3, alice, 1, 1000)
    alice.connect(1, hub, 3, 1000)
    hub.connect(4, bob, 1, 1000)
    bob.connect(1, hub, 4, 1000)
    fabric.register_fibre("hub", 3, "alice", 1, 5.0)
    fabric.register_fibre("hub", 4, "bob", 1, 5.0)
    return engine, fabric, hub, alice, bob


def pkt_bytes(kind, x=0):
    return bytes([kind]) + x.to_bytes(2, "big")


def test_forwarding_entry_emits_unchanged():
    engine, fabric, hub, alice, bob = rig()
    hub.on_classical_packet(9, pkt_bytes(1, 0xABCD))
    assert hub.counters["tx"] == 1
    engine.run_until(10_000)
    # alice matched the same fwd entry but port 3 is unwired there
    assert alice.counters["no_wire_drop"] == 1
    assert "tx" in "".join(engine.trace.lines or [])


def test_divert_executes_qcontrol_and_bounces():
    engine, fabric, hub, alice, bob = rig()
    hub.on_classical_packet(3, pkt_bytes(2))
    # diverted to qcontrol, which bounced it out the ingress port
    assert hub.counters["tx"] == 1
    assert hub.counters["ingress_drop"] == 0


def test_path_exclusivity_divert_does_not_forward():
    engine, fabric, hub, alice, bob = rig()
    before = hub.counters["tx"]
    hub.on_classical_packet(3, pkt_bytes(2))
    assert hub.counters["tx"] == before + 1  # exactly the qcontrol emission


def test_drop_by_all_ones_egress_spec():
    engine, fabric, hub, alice, bob = rig()
    hub.on_classical_packet(3, pkt_bytes(3))
    assert hub.counters["ingress_drop"] == 1
    assert hub.counters["tx"] == 0


def test_unmatched_packet_counts_no_route():
    engine, fabric, hub, alice, bob = rig()
    hub.on_classical_packet(3, pkt_bytes(200))
    assert hub.counters["no_route_drop"] == 1


def test_parse_error_is_counted_drop():
    engine, fabric, hub, alice, bob = rig()
    hub.on_classical_packet(3, b"\x01")  # too short for h_t
    assert hub.counters["parse_drop"] == 1


def test_event_multicast_replicates_with_bsm_info_rewrite():
    engine, fabric, hub, alice, bob = rig()
    hub.install_bsm_group(BsmGroup(5, 3, 4))
    hub.on_qcontrol_event(QControlEvent("heralding_bsm_outcome", 0, 5, True, 1))
    assert hub.counters["replications"] == 1
    assert hub.counters["tx"] == 2
    engine.run_until(10_000)
    # each copy ran egress independently; the stamp wrote its own egress port
    tx_lines = [l for l in engine.trace.lines if " hub tx" in f" {l}"]
    payloads = [l.split()[-1] for l in tx_lines]
    assert payloads[0] != payloads[1]
    assert payloads[0][0:2] == "ee" and payloads[1][0:2] == "ee"
    assert int(payloads[0][2:6], 16) == 3  # copy out port 3
    assert int(payloads[1][2:6], 16) == 4  # copy out port 4


def test_unknown_group_is_counted_drop_not_crash():
    engine, fabric, hub, alice, bob = rig()
    hub.on_qcontrol_event(QControlEvent("heralding_bsm_outcome", 0, 77, True, 1))
    assert hub.counters["unknown_group_drop"] == 1
    assert hub.counters["tx"] == 0


def test_removed_group_no_longer_replicates():
    engine, fabric, hub, alice, bob = rig()
    hub.install_bsm_group(BsmGroup(5, 3, 4))
    hub.remove_bsm_group(5)
    hub.on_qcontrol_event(QControlEvent("heralding_bsm_outcome", 0, 5, True, 1))
    assert hub.counters["unknown_group_drop"] == 1


def test_install_errors():
    engine, fabric, hub, alice, bob = rig(units=1)
    hub.install_bsm_group(BsmGroup(5, 3, 4))
    with pytest.raises(PortBusy):
        hub.install_bsm_group(BsmGroup(6, 4, 9))
    with pytest.raises(PortBusy):
        hub.install_bsm_group(BsmGroup(7, 9, 9))
    hub.remove_bsm_group(5)
    hub.install_bsm_group(BsmGroup(6, 3, 4))
    with pytest.raises(NoFreeBsmUnit):
        hub.install_bsm_group(BsmGroup(8, 5, 6))
    with pytest.raises(UnknownGroup):
        hub.remove_bsm_group(123)


def test_hub_group_consumes_unit_and_starts_generation():
    engine, fabric, hub, alice, bob = rig(units=2)
    hub.install_bsm_group(BsmGroup(5, 3, 4))
    assert hub.bsm_units_free == 1
    engine.run_until(1_000_000)
    assert fabric.attempts > 0
    hub.remove_bsm_group(5)
    assert hub.bsm_units_free == 2


def test_router_group_is_multicast_only():
    engine = Engine()
    fabric = Fabric(engine, PhysicsParams(), 1)
    router = DeviceShell("r", 5, Role.ROUTER, finished_program(), engine, fabric)
    router.install_bsm_group(BsmGroup(42, 1, 2))
    assert router.bsm_units_free == 0
    engine.run_until(1_000_000)
    assert fabric.attempts == 0  # no physical unit, no generation


def test_program_requesting_both_emissions_is_rejected():
    engine, fabric, hub, alice, bob = rig()
    with pytest.raises(ProtocolProgramError):
        hub.on_classical_packet(3, pkt_bytes(4))


def test_cpu_port_reaches_host_agent_synchronously():
    engine, fabric, hub, alice, bob = rig()
    host = HostStub()
    hub.attach_host(host)
    hub.processor.table_insert("ti", (9,), "fwd", (CPU_PORT,))
    hub.on_classical_packet(3, pkt_bytes(9, 0x1234))
    assert host.packets == [pkt_bytes(9, 0x1234)]
