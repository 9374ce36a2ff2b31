"""Interpreter semantics: parsing, deparsing, expressions, tables, registers.

Property tests check the runtime against independent oracles: big-integer
arithmetic reduced mod 2^w, and a naive linear-scan table lookup.
"""

import copy
import random

import pytest
from hypothesis import given, settings, strategies as st

from qnetsim.bmv2.builder import (
    ADD, AND, C, EQ, F, GE, INV, LT, NOT, REG, RT, SHL, SHR, TERN, VALID, XOR,
)
from qnetsim.runtime import (
    EvaluationError,
    IndexOutOfRange,
    KeyArityMismatch,
    ParamMismatch,
    ParseError,
    ProcessorState,
    UnknownAction,
    UnknownTable,
)

from helpers import base_builder, finish


def one_field_program(width=16):
    b = base_builder()
    b.header_type("h_t", [("x", width)])
    b.header("h", "h_t")
    b.parser().state("start", extracts=["h"])
    b.deparser("deparser", ["h"])
    b.action("nop")
    return b


# -- parser / deparser -------------------------------------------------------

def test_empty_parser_payload_passthrough():
    b = base_builder()
    b.header_type("h_t", [("x", 8)])
    b.header("h", "h_t")
    b.parser().state("start")
    b.deparser("deparser", [])
    state = ProcessorState(finish(b))
    pkt = state.parse(b"\x01\x02\x03\x04")
    assert not pkt.is_valid("h")
    assert pkt.payload == b"\x01\x02\x03\x04"


def test_parse_type_field_transition():
    b = base_builder()
    b.header_type("t_t", [("kind", 8)])
    b.header("t", "t_t")
    b.parser().state("start", extracts=["t"], key=[("t", "kind")],
                     transitions={0x01: None})
    b.deparser("deparser", ["t"])
    state = ProcessorState(finish(b))
    pkt = state.parse(b"\x01\xab")
    assert pkt.is_valid("t")
    assert pkt.get("t", "kind") == 1
    assert pkt.payload == b"\xab"


def test_parse_short_packet():
    state = ProcessorState(finish(one_field_program(32)))
    with pytest.raises(ParseError):
        state.parse(b"\x01\x02")


def test_parse_no_matching_transition():
    b = base_builder()
    b.header_type("t_t", [("kind", 8)])
    b.header("t", "t_t")
    b.parser().state("start", extracts=["t"], key=[("t", "kind")],
                     transitions={0x01: None})
    b.deparser("deparser", ["t"])
    state = ProcessorState(finish(b))
    with pytest.raises(ParseError):
        state.parse(b"\x02")


def test_deparse_big_endian():
    state = ProcessorState(finish(one_field_program(16)))
    pkt = state.new_packet()
    pkt.headers["h"].valid = True
    pkt.set("h", "x", 0x0102)
    assert state.deparse(pkt) == b"\x01\x02"


def test_deparse_skips_invalid_headers():
    state = ProcessorState(finish(one_field_program(16)))
    pkt = state.new_packet(b"zz")
    assert state.deparse(pkt) == b"zz"


@given(st.binary(min_size=2, max_size=40))
def test_parse_deparse_round_trip(raw):
    b = base_builder()
    b.header_type("hdr_t", [("a", 4), ("b", 7), ("c", 5)])
    b.header("hdr", "hdr_t")
    b.parser().state("start", extracts=["hdr"])
    b.deparser("deparser", ["hdr"])
    state = ProcessorState(finish(b))
    assert state.deparse(state.parse(raw)) == raw


# -- expressions --------------------------------------------------------------

def eval_state():
    b = one_field_program(8)
    b.register("r", 8, 4)
    return ProcessorState(finish(b))


def test_add_basic():
    assert eval_state().eval_expression(ADD(C(5), C(7))) == 12


def test_modular_wraparound_on_assign():
    b = one_field_program(8)
    b.action("bump").assign(("h", "x"), ADD(F("h", "x"), C(1)))
    pipe = b.pipeline("ingress", init="t")
    pipe.table("t", actions=["bump"], default="bump", next_tables={"bump": None})
    state = ProcessorState(finish(b))
    pkt = state.new_packet()
    pkt.headers["h"].valid = True
    pkt.set("h", "x", 0xFF)
    state.execute_pipeline("ingress", pkt)
    assert pkt.get("h", "x") == 0


def test_xor_pauli_accumulator():
    assert eval_state().eval_expression(XOR(C(0b10), C(0b11))) == 0b01


def test_invalid_header_read_fails_fast():
    state = ProcessorState(finish(one_field_program()))
    with pytest.raises(EvaluationError):
        state.eval_expression(F("h", "x"))


def test_validity_expression():
    state = ProcessorState(finish(one_field_program()))
    pkt = state.new_packet()
    assert state.eval_expression(VALID("h"), pkt) is False
    pkt.headers["h"].valid = True
    assert state.eval_expression(VALID("h"), pkt) is True


def test_boolean_ops_reject_integers():
    state = eval_state()
    with pytest.raises(EvaluationError):
        state.eval_expression(AND(C(1), C(0)))
    with pytest.raises(EvaluationError):
        state.eval_expression(NOT(C(1)))


@settings(max_examples=300)
@given(
    op=st.sampled_from(["&", "|", "^", "+", "-", "*"]),
    a=st.integers(min_value=0, max_value=2**64 - 1),
    b=st.integers(min_value=0, max_value=2**64 - 1),
    width=st.integers(min_value=1, max_value=64),
)
def test_arithmetic_matches_bigint_oracle(op, a, b, width):
    """Assignment reduces the unbounded result mod 2^width (the oracle)."""
    import operator
    oracle = {"&": operator.and_, "|": operator.or_, "^": operator.xor,
              "+": operator.add, "-": operator.sub, "*": operator.mul}[op](a, b)
    oracle %= 2 ** width

    builder = base_builder()
    builder.header_type("h_t", [("x", width)])
    builder.header("h", "h_t")
    builder.parser().state("start", extracts=["h"])
    builder.deparser("deparser", ["h"])
    from qnetsim.bmv2.ir import BinOp
    builder.action("calc").assign(("h", "x"), BinOp(op, C(a), C(b)))
    pipe = builder.pipeline("ingress", init="t")
    pipe.table("t", actions=["calc"], default="calc", next_tables={"calc": None})
    state = ProcessorState(finish(builder))
    pkt = state.new_packet()
    pkt.headers["h"].valid = True
    state.execute_pipeline("ingress", pkt)
    assert pkt.get("h", "x") == oracle


def test_shift_and_compare():
    s = eval_state()
    assert s.eval_expression(SHL(C(1), C(4))) == 16
    assert s.eval_expression(SHR(C(0x80), C(3))) == 0x10
    assert s.eval_expression(LT(C(3), C(5))) is True
    assert s.eval_expression(GE(C(5), C(5))) is True
    assert s.eval_expression(TERN(EQ(C(1), C(1)), C(10), C(20))) == 10
    assert s.eval_expression(INV(C(0))) == -1  # masked at assignment


def test_register_in_expression():
    state = eval_state()
    state.register_write("r", 2, 9)
    assert state.eval_expression(REG("r", C(2))) == 9
    with pytest.raises(IndexOutOfRange):
        state.eval_expression(REG("r", C(99)))


# -- tables -------------------------------------------------------------------

def table_program():
    b = base_builder()
    b.header_type("h_t", [("k", 16), ("x", 16)])
    b.header("h", "h_t")
    b.parser().state("start", extracts=["h"])
    b.deparser("deparser", ["h"])
    b.action("nop")
    b.action("set_x", params=[("v", 16)]).assign(("h", "x"), RT(0))
    pipe = b.pipeline("ingress", init="t")
    pipe.table("t", key=[("h", "k")], actions=["set_x", "nop"], default="nop",
               next_tables={"set_x": None, "nop": None})
    return finish(b)


def run_with_key(state, k):
    pkt = state.new_packet()
    pkt.headers["h"].valid = True
    pkt.set("h", "k", k)
    state.execute_pipeline("ingress", pkt)
    return pkt.get("h", "x")


def test_table_hit_miss_default():
    state = ProcessorState(table_program())
    state.table_insert("t", (7,), "set_x", (42,))
    assert run_with_key(state, 7) == 42
    assert run_with_key(state, 8) == 0  # default no-op


def test_table_insert_replaces_and_delete_restores_default():
    state = ProcessorState(table_program())
    state.table_insert("t", (7,), "set_x", (42,))
    state.table_insert("t", (7,), "set_x", (43,))
    assert run_with_key(state, 7) == 43
    state.table_delete("t", (7,))
    assert run_with_key(state, 7) == 0


def test_table_errors():
    state = ProcessorState(table_program())
    with pytest.raises(UnknownTable):
        state.table_insert("zzz", (1,), "nop")
    with pytest.raises(UnknownAction):
        state.table_insert("t", (1,), "missing")
    with pytest.raises(KeyArityMismatch):
        state.table_insert("t", (1, 2), "nop")
    with pytest.raises(KeyArityMismatch):
        state.table_insert("t", (1 << 20,), "set_x", (1,))
    with pytest.raises(ParamMismatch):
        state.table_insert("t", (1,), "set_x", ())
    with pytest.raises(ParamMismatch):
        state.table_insert("t", (1,), "set_x", (1 << 20,))


def test_table_semantics_against_linear_scan_oracle():
    rng = random.Random(42)
    state = ProcessorState(table_program())
    shadow = {}  # key -> param (the naive oracle)
    for _ in range(300):
        op = rng.random()
        key = rng.randrange(0, 30)
        if op < 0.6:
            val = rng.randrange(0, 2**16)
            state.table_insert("t", (key,), "set_x", (val,))
            shadow[key] = val
        elif op < 0.8 and shadow:
            victim = rng.choice(sorted(shadow))
            state.table_delete("t", (victim,))
            del shadow[victim]
        probe = rng.randrange(0, 30)
        expected = shadow.get(probe, 0)
        assert run_with_key(state, probe) == expected


# -- registers ----------------------------------------------------------------

def test_register_fresh_reads_zero():
    b = one_field_program()
    b.register("r", 8, 4)
    state = ProcessorState(finish(b))
    assert state.register_read("r", 0) == 0


def test_register_write_truncates():
    b = one_field_program()
    b.register("r", 8, 4)
    state = ProcessorState(finish(b))
    state.register_write("r", 1, 300)
    assert state.register_read("r", 1) == 44  # 300 mod 256


def test_register_index_out_of_range():
    b = one_field_program()
    b.register("r", 8, 4)
    state = ProcessorState(finish(b))
    with pytest.raises(IndexOutOfRange):
        state.register_read("r", 4)
    with pytest.raises(IndexOutOfRange):
        state.register_write("r", 99, 1)


# -- side-effect boundedness ---------------------------------------------------

def test_execution_mutates_only_packet_and_registers():
    b = base_builder()
    b.header_type("h_t", [("k", 8), ("x", 8)])
    b.header("h", "h_t")
    b.register("r", 8, 2)
    b.parser().state("start", extracts=["h"])
    b.deparser("deparser", ["h"])
    b.action("touch").assign(("h", "x"), C(5)).reg_write("r", C(0), C(9))
    pipe = b.pipeline("ingress", init="t")
    pipe.table("t", actions=["touch"], default="touch", next_tables={"touch": None})
    prog = finish(b)
    state = ProcessorState(prog)
    state.table_insert  # no-op attr touch

    entries_before = copy.deepcopy(state.entries)
    program_before = state.program
    pkt = state.new_packet()
    pkt.headers["h"].valid = True
    state.execute_pipeline("ingress", pkt)

    assert pkt.get("h", "x") == 5
    assert state.registers["r"] == [9, 0]
    assert state.entries == entries_before
    assert state.program is program_before
    assert state.program == prog
