"""Builder recipes for the shipped protocol programs.

Three programs implement the link/network-layer suite:

- hub: assigns a fresh label per successful optical outcome and multicasts a
  HERALD to the two connected nodes through the group with the outcome's BSM
  id; forwards TRACK/TRACK_ACK between spokes by (conn_id, direction) and
  routes REQUEST/COMPLETE envelopes by destination node id.

- endnode: records heralded link pairs; the connection head turns a HERALD
  into a forward TRACK stamped with a fresh end-to-end sequence and the
  pair's Bell index as the initial Pauli accumulator; the tail matches a
  TRACK's label against its stored pair (a one-slot stash covers a TRACK
  beating its HERALD), delivers to the application via the CPU copy of a
  group multicast whose other copy is the returning TRACK_ACK, releases its
  qubit, and counts pairs in a register (the remaining count is stamped into
  the CPU copy's label field by egress); the head delivers on TRACK_ACK with
  a single CPU emission. HERALDs for unconfigured groups release the
  arriving qubit (window conditions around teardown).

- router: stores one pending link pair per port ("port == qubit"); when both
  sides of a connection hold a pair it issues the swap operation with the
  connection id as the BSM id; the outcome writes label-indexed translation
  maps (up-label -> down-label + accumulator delta, and the reverse for
  acks); TRACKs are rewritten and forwarded through the CID group (the
  backward copy of the multicast is sunk by an egress drop rule installed by
  the control plane), TRACK_ACKs are label-restored and forwarded upstream
  the same way. A one-slot stash holds a TRACK that beats its swap outcome.

Register state is sized for desk scale: label maps are 64-slot hash tables
indexed by the low 6 label bits with full-label confirmation, and routers
index pair slots by ingress port (ports must stay below 64).
"""

from __future__ import annotations

from ..arch.metadata import CPU_PORT, DROP_PORT, enum_declarations
from ..bmv2.builder import (
    ADD, AND, BAND, C, EQ, F, ProgramBuilder, REG, RT, SUB, TERN, XOR,
)
from ..bmv2.ir import PipelineProgram
from .wire import MSG_COMPLETE, MSG_HERALD, MSG_REQUEST, MSG_TRACK, MSG_TRACK_ACK

LABEL_MAP_SIZE = 64
LABEL_MAP_MASK = LABEL_MAP_SIZE - 1
MAX_ROUTER_PORTS = 64
HUB_LABEL_STREAMS = 16

_QC = "qcontrol_metadata"
_XC = "xconnect_metadata"
_STD = "standard_metadata"
_SCR = "scratch"


def _common_declarations(b: ProgramBuilder, scratch_fields: list[tuple[str, int]]):
    b.declare_target_metadata()
    for name, members in enum_declarations().items():
        b.enum(name, members)
    b.header_type("link_t", [("msg_type", 8), ("bsm_id", 16), ("label", 32), ("bell", 8)])
    b.header_type("net_t", [("conn_id", 16), ("e2e_seq", 32), ("pauli_acc", 8),
                            ("direction", 8)])
    b.header_type("request_t", [("src", 16), ("dst", 16), ("num_pairs", 16),
                                ("client_seq", 32)])
    b.header("link", "link_t")
    b.header("net", "net_t")
    b.header("request", "request_t")
    b.header_type("scratch_t", scratch_fields)
    b.metadata(_SCR, "scratch_t")

    p = b.parser("parser", start="start")
    p.state("start", extracts=["link"], key=[("link", "msg_type")],
            transitions={MSG_TRACK: "st_net", MSG_TRACK_ACK: "st_net",
                         MSG_REQUEST: "st_request", None: None})
    p.state("st_net", extracts=["net"])
    p.state("st_request", extracts=["request"])
    b.deparser("deparser", ["link", "net", "request"])

    b.action("nop")
    b.action("goto_route")
    b.action("drop_packet").assign((_STD, "egress_spec"), C(DROP_PORT))
    b.action("forward", params=[("port", 9)]).assign((_STD, "egress_spec"), RT(0))
    b.action("divert_to_qcontrol").assign((_XC, "pathway"), C(1))
    b.action("release_ingress_qubit") \
        .assign((_QC, "operation"), C(2)) \
        .assign((_QC, "release_qubit"), F(_XC, "ingress_port"))


def _node_ingress(b: ProgramBuilder):
    """Shared by end nodes and routers: divert protocol traffic to qcontrol,
    route REQUEST/COMPLETE envelopes by destination node id."""
    ig = b.pipeline("ingress", init="t_dispatch")
    td = ig.table("t_dispatch", key=[("link", "msg_type")],
                  actions=["divert_to_qcontrol", "goto_route", "drop_packet"],
                  default="drop_packet",
                  next_tables={"divert_to_qcontrol": None, "goto_route": "t_route",
                               "drop_packet": None})
    td.const_entry([MSG_HERALD], "divert_to_qcontrol")
    td.const_entry([MSG_TRACK], "divert_to_qcontrol")
    td.const_entry([MSG_TRACK_ACK], "divert_to_qcontrol")
    td.const_entry([MSG_REQUEST], "goto_route")
    td.const_entry([MSG_COMPLETE], "goto_route")
    ig.table("t_route", key=[("link", "bsm_id")],
             actions=["forward", "drop_packet"], default="drop_packet",
             next_tables={"forward": None, "drop_packet": None})


def endnode_program() -> PipelineProgram:
    b = ProgramBuilder(target="v1quantum")
    _common_declarations(b, [
        ("cid", 16), ("is_head", 8), ("num_pairs", 16), ("cnt", 16),
        ("remaining", 16), ("seq", 32), ("from_stash", 8),
    ])
    for name, width, size in [
        ("r_seq", 32, 1), ("r_done", 16, 1),
        ("r_pair_valid", 1, 1), ("r_pair_label", 32, 1), ("r_pair_bell", 8, 1),
        ("r_stash_valid", 1, 1), ("r_stash_label", 32, 1),
        ("r_stash_seq", 32, 1), ("r_stash_acc", 8, 1),
    ]:
        b.register(name, width, size)

    _node_ingress(b)

    # -- qcontrol actions -----------------------------------------------------
    b.action("goto_herald")
    b.action("conn_prep").assign((_SCR, "cid"), F("net", "conn_id"))

    b.action("herald_conf", params=[("cid", 16), ("is_head", 8)]) \
        .assign((_SCR, "cid"), RT(0)) \
        .assign((_SCR, "is_head"), RT(1))

    b.action("head_emit_track") \
        .assign((_SCR, "seq"), ADD(REG("r_seq", C(0)), C(1))) \
        .reg_write("r_seq", C(0), F(_SCR, "seq")) \
        .add_header("net") \
        .assign(("net", "conn_id"), F(_SCR, "cid")) \
        .assign(("net", "e2e_seq"), F(_SCR, "seq")) \
        .assign(("net", "pauli_acc"), F("link", "bell")) \
        .assign(("net", "direction"), C(0)) \
        .assign(("link", "msg_type"), C(MSG_TRACK)) \
        .assign(("link", "bsm_id"), F(_SCR, "cid")) \
        .assign((_XC, "egress_spec"), F(_XC, "ingress_port"))

    b.action("tail_store_pair") \
        .reg_write("r_pair_valid", C(0), C(1)) \
        .reg_write("r_pair_label", C(0), F("link", "label")) \
        .reg_write("r_pair_bell", C(0), F("link", "bell"))

    b.action("mark_from_stash").assign((_SCR, "from_stash"), C(1))

    b.action("conn_conf", params=[("num_pairs", 16)]) \
        .assign((_SCR, "num_pairs"), RT(0))

    def _count_delivery(a):
        # done-counter rolls back to zero when the request's last pair lands
        a.assign((_SCR, "cnt"), ADD(REG("r_done", C(0)), C(1)))
        a.assign((_SCR, "remaining"), SUB(F(_SCR, "num_pairs"), F(_SCR, "cnt")))
        a.reg_write("r_done", C(0),
                    TERN(EQ(F(_SCR, "cnt"), F(_SCR, "num_pairs")), C(0), F(_SCR, "cnt")))
        return a

    _count_delivery(b.action("deliver_from_track")) \
        .reg_write("r_pair_valid", C(0), C(0)) \
        .assign(("net", "direction"), C(1)) \
        .assign(("link", "msg_type"), C(MSG_TRACK_ACK)) \
        .assign((_QC, "operation"), C(2)) \
        .assign((_QC, "release_qubit"), F(_XC, "ingress_port")) \
        .assign((_XC, "bsm_grp"), F(_SCR, "cid"))

    _count_delivery(b.action("deliver_from_stash")) \
        .reg_write("r_pair_valid", C(0), C(0)) \
        .reg_write("r_stash_valid", C(0), C(0)) \
        .add_header("net") \
        .assign(("net", "conn_id"), F(_SCR, "cid")) \
        .assign(("net", "e2e_seq"), REG("r_stash_seq", C(0))) \
        .assign(("net", "pauli_acc"), REG("r_stash_acc", C(0))) \
        .assign(("net", "direction"), C(1)) \
        .assign(("link", "msg_type"), C(MSG_TRACK_ACK)) \
        .assign((_QC, "operation"), C(2)) \
        .assign((_QC, "release_qubit"), F(_XC, "ingress_port")) \
        .assign((_XC, "bsm_grp"), F(_SCR, "cid"))

    _count_delivery(b.action("deliver_at_head")) \
        .assign((_XC, "egress_spec"), C(CPU_PORT))

    b.action("stash_track") \
        .reg_write("r_stash_valid", C(0), C(1)) \
        .reg_write("r_stash_label", C(0), F("link", "label")) \
        .reg_write("r_stash_seq", C(0), F("net", "e2e_seq")) \
        .reg_write("r_stash_acc", C(0), F("net", "pauli_acc"))

    b.action("stamp_remaining").assign(("link", "label"), F(_SCR, "remaining"))

    # -- qcontrol graph ----------------------------------------------------------
    qc = b.pipeline("qcontrol", init="c_ev")
    qc.conditional("c_ev", EQ(F(_QC, "event_type"), C(2)),
                   true_next="t_qmsg", false_next="t_event")
    # Physical heralds also reach end nodes; the protocol acts on the labelled
    # HERALD packet instead, so events are acknowledged and dropped.
    qc.table("t_event", actions=["nop"], default="nop", next_tables={"nop": None})

    tq = qc.table("t_qmsg", key=[("link", "msg_type")],
                  actions=["goto_herald", "conn_prep", "nop"], default="nop",
                  next_tables={"goto_herald": "t_herald", "conn_prep": "t_conn",
                               "nop": None})
    tq.const_entry([MSG_HERALD], "goto_herald")
    tq.const_entry([MSG_TRACK], "conn_prep")
    tq.const_entry([MSG_TRACK_ACK], "conn_prep")

    qc.table("t_herald", key=[("link", "bsm_id")],
             actions=["herald_conf", "release_ingress_qubit"],
             default="release_ingress_qubit",
             next_tables={"herald_conf": "c_head", "release_ingress_qubit": None})
    qc.conditional("c_head", EQ(F(_SCR, "is_head"), C(1)),
                   true_next="t_head_emit", false_next="t_tail_store")
    qc.table("t_head_emit", actions=["head_emit_track"], default="head_emit_track",
             next_tables={"head_emit_track": None})
    qc.table("t_tail_store", actions=["tail_store_pair"], default="tail_store_pair",
             next_tables={"tail_store_pair": "c_stash"})
    qc.conditional("c_stash",
                   AND(EQ(REG("r_stash_valid", C(0)), C(1)),
                       EQ(REG("r_stash_label", C(0)), F("link", "label"))),
                   true_next="t_mark_stash", false_next=None)
    qc.table("t_mark_stash", actions=["mark_from_stash"], default="mark_from_stash",
             next_tables={"mark_from_stash": "t_conn"})

    qc.table("t_conn", key=[(_SCR, "cid")],
             actions=["conn_conf", "release_ingress_qubit"],
             default="release_ingress_qubit",
             next_tables={"conn_conf": "c_branch", "release_ingress_qubit": None})
    qc.conditional("c_branch", EQ(F(_SCR, "from_stash"), C(1)),
                   true_next="t_deliver_stash", false_next="c_is_track")
    qc.conditional("c_is_track", EQ(F("link", "msg_type"), C(MSG_TRACK)),
                   true_next="c_pair_match", false_next="t_head_deliver")
    qc.conditional("c_pair_match",
                   AND(EQ(REG("r_pair_valid", C(0)), C(1)),
                       EQ(REG("r_pair_label", C(0)), F("link", "label"))),
                   true_next="t_track_deliver", false_next="t_track_stash")
    qc.table("t_track_deliver", actions=["deliver_from_track"],
             default="deliver_from_track", next_tables={"deliver_from_track": None})
    qc.table("t_track_stash", actions=["stash_track"], default="stash_track",
             next_tables={"stash_track": None})
    qc.table("t_deliver_stash", actions=["deliver_from_stash"],
             default="deliver_from_stash", next_tables={"deliver_from_stash": None})
    qc.table("t_head_deliver", actions=["deliver_at_head"], default="deliver_at_head",
             next_tables={"deliver_at_head": None})

    # -- egress: stamp remaining-pairs into CPU delivery copies ------------------
    eg = b.pipeline("egress", init="t_egress")
    te = eg.table("t_egress", key=[("link", "msg_type"), (_STD, "egress_port")],
                  actions=["stamp_remaining", "nop"], default="nop",
                  next_tables={"stamp_remaining": None, "nop": None})
    te.const_entry([MSG_TRACK_ACK, CPU_PORT], "stamp_remaining")

    return b.build()


def router_program() -> PipelineProgram:
    b = ProgramBuilder(target="v1quantum")
    _common_declarations(b, [
        ("cid", 16), ("other", 9), ("is_up", 8), ("q_up", 9), ("q_dn", 9),
        ("lup", 32), ("ldn", 32), ("idx", 16), ("aidx", 16),
    ])
    for name, width, size in [
        ("r_pv", 1, MAX_ROUTER_PORTS), ("r_pl", 32, MAX_ROUTER_PORTS),
        ("r_pb", 8, MAX_ROUTER_PORTS),
        ("r_sw_label_up", 32, 1), ("r_sw_label_dn", 32, 1), ("r_sw_bell_dn", 8, 1),
        ("r_m_valid", 1, LABEL_MAP_SIZE), ("r_m_upl", 32, LABEL_MAP_SIZE),
        ("r_m_dnl", 32, LABEL_MAP_SIZE), ("r_m_acc", 8, LABEL_MAP_SIZE),
        ("r_ma_upl", 32, LABEL_MAP_SIZE), ("r_ma_dnl", 32, LABEL_MAP_SIZE),
        ("r_ts_valid", 1, 1), ("r_ts_label", 32, 1), ("r_ts_seq", 32, 1),
        ("r_ts_acc", 8, 1),
    ]:
        b.register(name, width, size)

    _node_ingress(b)

    # -- qcontrol actions -----------------------------------------------------
    b.action("goto_herald")
    b.action("goto_track")
    b.action("goto_ack")
    b.action("goto_swap_outcome")

    b.action("herald_store", params=[("cid", 16), ("other_port", 9), ("is_up", 8)]) \
        .reg_write("r_pv", F(_XC, "ingress_port"), C(1)) \
        .reg_write("r_pl", F(_XC, "ingress_port"), F("link", "label")) \
        .reg_write("r_pb", F(_XC, "ingress_port"), F("link", "bell")) \
        .assign((_SCR, "cid"), RT(0)) \
        .assign((_SCR, "other"), RT(1)) \
        .assign((_SCR, "is_up"), RT(2))

    b.action("fire_swap") \
        .assign((_SCR, "q_up"), TERN(EQ(F(_SCR, "is_up"), C(1)),
                                     F(_XC, "ingress_port"), F(_SCR, "other"))) \
        .assign((_SCR, "q_dn"), TERN(EQ(F(_SCR, "is_up"), C(1)),
                                     F(_SCR, "other"), F(_XC, "ingress_port"))) \
        .reg_write("r_sw_label_up", C(0), REG("r_pl", F(_SCR, "q_up"))) \
        .reg_write("r_sw_label_dn", C(0), REG("r_pl", F(_SCR, "q_dn"))) \
        .reg_write("r_sw_bell_dn", C(0), REG("r_pb", F(_SCR, "q_dn"))) \
        .reg_write("r_pv", F(_SCR, "q_up"), C(0)) \
        .reg_write("r_pv", F(_SCR, "q_dn"), C(0)) \
        .assign((_QC, "operation"), C(1)) \
        .assign((_QC, "swap_bsm_id"), F(_SCR, "cid")) \
        .assign((_QC, "swap_qubit_0"), F(_SCR, "q_up")) \
        .assign((_QC, "swap_qubit_1"), F(_SCR, "q_dn"))

    b.action("swap_done", params=[("cid", 16)]) \
        .assign((_SCR, "cid"), RT(0)) \
        .assign((_SCR, "lup"), REG("r_sw_label_up", C(0))) \
        .assign((_SCR, "ldn"), REG("r_sw_label_dn", C(0))) \
        .assign((_SCR, "idx"), BAND(F(_SCR, "lup"), C(LABEL_MAP_MASK))) \
        .assign((_SCR, "aidx"), BAND(F(_SCR, "ldn"), C(LABEL_MAP_MASK))) \
        .reg_write("r_m_valid", F(_SCR, "idx"), C(1)) \
        .reg_write("r_m_upl", F(_SCR, "idx"), F(_SCR, "lup")) \
        .reg_write("r_m_dnl", F(_SCR, "idx"), F(_SCR, "ldn")) \
        .reg_write("r_m_acc", F(_SCR, "idx"),
                   XOR(F(_QC, "bsm_bell_index"), REG("r_sw_bell_dn", C(0)))) \
        .reg_write("r_ma_upl", F(_SCR, "aidx"), F(_SCR, "lup")) \
        .reg_write("r_ma_dnl", F(_SCR, "aidx"), F(_SCR, "ldn"))

    b.action("replay_stashed_track") \
        .add_header("link") \
        .add_header("net") \
        .assign(("link", "msg_type"), C(MSG_TRACK)) \
        .assign(("link", "bsm_id"), F(_SCR, "cid")) \
        .assign(("link", "label"), F(_SCR, "ldn")) \
        .assign(("link", "bell"), C(0)) \
        .assign(("net", "conn_id"), F(_SCR, "cid")) \
        .assign(("net", "e2e_seq"), REG("r_ts_seq", C(0))) \
        .assign(("net", "pauli_acc"),
                XOR(REG("r_ts_acc", C(0)), REG("r_m_acc", F(_SCR, "idx")))) \
        .assign(("net", "direction"), C(0)) \
        .reg_write("r_m_valid", F(_SCR, "idx"), C(0)) \
        .reg_write("r_ts_valid", C(0), C(0)) \
        .assign((_XC, "bsm_grp"), F(_SCR, "cid"))

    b.action("track_conf") \
        .assign((_SCR, "cid"), F("net", "conn_id")) \
        .assign((_SCR, "idx"), BAND(F("link", "label"), C(LABEL_MAP_MASK)))

    b.action("forward_track") \
        .assign(("net", "pauli_acc"),
                XOR(F("net", "pauli_acc"), REG("r_m_acc", F(_SCR, "idx")))) \
        .assign(("link", "label"), REG("r_m_dnl", F(_SCR, "idx"))) \
        .reg_write("r_m_valid", F(_SCR, "idx"), C(0)) \
        .assign((_XC, "bsm_grp"), F(_SCR, "cid"))

    b.action("stash_track") \
        .reg_write("r_ts_valid", C(0), C(1)) \
        .reg_write("r_ts_label", C(0), F("link", "label")) \
        .reg_write("r_ts_seq", C(0), F("net", "e2e_seq")) \
        .reg_write("r_ts_acc", C(0), F("net", "pauli_acc"))

    b.action("ack_conf") \
        .assign((_SCR, "cid"), F("net", "conn_id")) \
        .assign((_SCR, "aidx"), BAND(F("link", "label"), C(LABEL_MAP_MASK)))

    b.action("forward_ack") \
        .assign(("link", "label"), REG("r_ma_upl", F(_SCR, "aidx"))) \
        .assign((_XC, "bsm_grp"), F(_SCR, "cid"))

    # -- qcontrol graph ----------------------------------------------------------
    qc = b.pipeline("qcontrol", init="c_ev")
    qc.conditional("c_ev", EQ(F(_QC, "event_type"), C(2)),
                   true_next="t_qmsg", false_next="t_event")
    tev = qc.table("t_event", key=[(_QC, "event_type")],
                   actions=["nop", "goto_swap_outcome"], default="nop",
                   next_tables={"nop": None, "goto_swap_outcome": "t_swap_outcome"})
    tev.const_entry([1], "goto_swap_outcome")

    qc.table("t_swap_outcome", key=[(_QC, "bsm_id")],
             actions=["swap_done", "nop"], default="nop",
             next_tables={"swap_done": "c_replay", "nop": None})
    qc.conditional("c_replay",
                   AND(EQ(REG("r_ts_valid", C(0)), C(1)),
                       EQ(REG("r_ts_label", C(0)), F(_SCR, "lup"))),
                   true_next="t_replay", false_next=None)
    qc.table("t_replay", actions=["replay_stashed_track"],
             default="replay_stashed_track",
             next_tables={"replay_stashed_track": None})

    tq = qc.table("t_qmsg", key=[("link", "msg_type")],
                  actions=["goto_herald", "goto_track", "goto_ack", "nop"],
                  default="nop",
                  next_tables={"goto_herald": "t_herald", "goto_track": "t_track",
                               "goto_ack": "t_ack", "nop": None})
    tq.const_entry([MSG_HERALD], "goto_herald")
    tq.const_entry([MSG_TRACK], "goto_track")
    tq.const_entry([MSG_TRACK_ACK], "goto_ack")

    # Keyed on ingress port too: both neighbouring hubs may use the same
    # group id, but their HERALDs arrive on different ports.
    qc.table("t_herald", key=[("link", "bsm_id"), (_XC, "ingress_port")],
             actions=["herald_store", "release_ingress_qubit"],
             default="release_ingress_qubit",
             next_tables={"herald_store": "c_both", "release_ingress_qubit": None})
    qc.conditional("c_both", EQ(REG("r_pv", F(_SCR, "other")), C(1)),
                   true_next="t_swap_fire", false_next=None)
    qc.table("t_swap_fire", actions=["fire_swap"], default="fire_swap",
             next_tables={"fire_swap": None})

    qc.table("t_track", key=[("net", "conn_id")],
             actions=["track_conf", "nop"], default="nop",
             next_tables={"track_conf": "c_map", "nop": None})
    qc.conditional("c_map",
                   AND(EQ(REG("r_m_valid", F(_SCR, "idx")), C(1)),
                       EQ(REG("r_m_upl", F(_SCR, "idx")), F("link", "label"))),
                   true_next="t_track_fwd", false_next="t_track_stash")
    qc.table("t_track_fwd", actions=["forward_track"], default="forward_track",
             next_tables={"forward_track": None})
    qc.table("t_track_stash", actions=["stash_track"], default="stash_track",
             next_tables={"stash_track": None})

    qc.table("t_ack", key=[("net", "conn_id")],
             actions=["ack_conf", "nop"], default="nop",
             next_tables={"ack_conf": "c_ack_map", "nop": None})
    qc.conditional("c_ack_map",
                   EQ(REG("r_ma_dnl", F(_SCR, "aidx")), F("link", "label")),
                   true_next="t_ack_fwd", false_next=None)
    qc.table("t_ack_fwd", actions=["forward_ack"], default="forward_ack",
             next_tables={"forward_ack": None})

    # -- egress: per-request drop rules sink the backward multicast copies -------
    eg = b.pipeline("egress", init="t_egress")
    eg.table("t_egress", key=[("link", "msg_type"), (_STD, "egress_port")],
             actions=["drop_packet", "nop"], default="nop",
             next_tables={"drop_packet": None, "nop": None})

    return b.build()


def hub_program() -> PipelineProgram:
    b = ProgramBuilder(target="v1quantum")
    _common_declarations(b, [("uidx", 16), ("label", 32)])
    b.register("r_label", 32, HUB_LABEL_STREAMS)

    b.action("goto_conn_route")
    b.action("emit_herald") \
        .assign((_SCR, "uidx"), BAND(F(_QC, "bsm_id"), C(HUB_LABEL_STREAMS - 1))) \
        .assign((_SCR, "label"), ADD(REG("r_label", F(_SCR, "uidx")), C(1))) \
        .reg_write("r_label", F(_SCR, "uidx"), F(_SCR, "label")) \
        .add_header("link") \
        .assign(("link", "msg_type"), C(MSG_HERALD)) \
        .assign(("link", "bsm_id"), F(_QC, "bsm_id")) \
        .assign(("link", "label"), F(_SCR, "label")) \
        .assign(("link", "bell"), F(_QC, "bsm_bell_index")) \
        .assign((_XC, "bsm_grp"), F(_QC, "bsm_id"))
    b.action("goto_heralding")

    # -- ingress: conn-id forwarding for TRACK/ACK, node-id routing otherwise ----
    ig = b.pipeline("ingress", init="t_dispatch")
    td = ig.table("t_dispatch", key=[("link", "msg_type")],
                  actions=["goto_route", "goto_conn_route", "drop_packet"],
                  default="drop_packet",
                  next_tables={"goto_route": "t_route",
                               "goto_conn_route": "t_conn_route",
                               "drop_packet": None})
    td.const_entry([MSG_TRACK], "goto_conn_route")
    td.const_entry([MSG_TRACK_ACK], "goto_conn_route")
    td.const_entry([MSG_REQUEST], "goto_route")
    td.const_entry([MSG_COMPLETE], "goto_route")
    ig.table("t_route", key=[("link", "bsm_id")],
             actions=["forward", "drop_packet"], default="drop_packet",
             next_tables={"forward": None, "drop_packet": None})
    ig.table("t_conn_route", key=[("net", "conn_id"), ("net", "direction")],
             actions=["forward", "drop_packet"], default="drop_packet",
             next_tables={"forward": None, "drop_packet": None})

    # -- qcontrol: label successful outcomes, multicast the HERALD ----------------
    qc = b.pipeline("qcontrol", init="c_ev")
    qc.conditional("c_ev", EQ(F(_QC, "event_type"), C(2)),
                   true_next=None, false_next="t_event")
    tev = qc.table("t_event", key=[(_QC, "event_type")],
                   actions=["nop", "goto_heralding"], default="nop",
                   next_tables={"nop": None, "goto_heralding": "c_success"})
    tev.const_entry([0], "goto_heralding")
    qc.conditional("c_success", EQ(F(_QC, "bsm_success"), C(1)),
                   true_next="t_herald_emit", false_next=None)
    qc.table("t_herald_emit", actions=["emit_herald"], default="emit_herald",
             next_tables={"emit_herald": None})

    b.pipeline("egress", init=None)

    return b.build()


def all_programs() -> dict[str, PipelineProgram]:
    return {"endnode": endnode_program(), "router": router_program(),
            "hub": hub_program()}


def write_assets(directory) -> list[str]:
    """Serialize the three programs as shipped document assets."""
    import pathlib

    from ..bmv2.loader import serialize_program

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, prog in all_programs().items():
        path = directory / f"{name}.json"
        path.write_text(serialize_program(prog))
        written.append(str(path))
    return written


if __name__ == "__main__":  # pragma: no cover
    import sys

    out = sys.argv[1] if len(sys.argv) > 1 else "programs"
    for path in write_assets(out):
        print(path)
