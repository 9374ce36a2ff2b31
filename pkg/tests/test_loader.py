"""Loader/serializer tests: acceptance of the subset, rejection of everything else."""

import copy
import json
import random

import pytest

from qnetsim.bmv2.builder import RT
from qnetsim.bmv2 import (
    DanglingReference,
    MalformedDocument,
    ProgramBuilder,
    ProgramValidationError,
    UnreachableState,
    UnsupportedConstruct,
    WidthOutOfRange,
    load_program,
    serialize_document,
    serialize_program,
)


def minimal_program_doc():
    """Smallest valid quantum-target document: one header type, empty pipelines."""
    b = ProgramBuilder(target="v1quantum")
    b.declare_target_metadata()
    b.header_type("probe_t", [("kind", 8)])
    b.header("probe", "probe_t")
    b.parser("parser", start="start").state("start")
    b.deparser("deparser", [])
    for name in ("ingress", "egress", "qcontrol"):
        b.pipeline(name, init=None)
    return serialize_document(b.build())


def test_minimal_document_loads():
    prog = load_program(json.dumps(minimal_program_doc()))
    assert sorted(p.name for p in prog.pipelines) == ["egress", "ingress", "qcontrol"]
    assert sum(len(p.tables) for p in prog.pipelines) == 0


def test_missing_pipeline_rejected():
    doc = minimal_program_doc()
    doc["pipelines"] = [p for p in doc["pipelines"] if p["name"] != "qcontrol"]
    with pytest.raises(MalformedDocument):
        load_program(json.dumps(doc))


def test_dangling_default_action():
    doc = minimal_program_doc()
    for p in doc["pipelines"]:
        if p["name"] == "ingress":
            p["init_table"] = "t"
            p["tables"] = [{
                "name": "t", "id": 0, "match_type": "exact", "key": [],
                "actions": ["nonexistent"], "next_tables": {},
                "default_entry": {"action_name": "nonexistent", "action_data": []},
                "entries": [],
            }]
    with pytest.raises(DanglingReference):
        load_program(json.dumps(doc))


def test_width_out_of_range():
    doc = minimal_program_doc()
    doc["header_types"].append({"name": "bad_t", "id": 99, "fields": [["x", 65]]})
    with pytest.raises(WidthOutOfRange):
        load_program(json.dumps(doc))
    doc = minimal_program_doc()
    doc["header_types"].append({"name": "bad_t", "id": 99, "fields": [["x", 0]]})
    with pytest.raises(WidthOutOfRange):
        load_program(json.dumps(doc))


def test_unsupported_top_level_construct():
    doc = minimal_program_doc()
    doc["meter_arrays"] = []
    with pytest.raises(UnsupportedConstruct) as exc:
        load_program(json.dumps(doc))
    assert "meter_arrays" in str(exc.value)


def test_unsupported_match_type():
    doc = minimal_program_doc()
    for p in doc["pipelines"]:
        if p["name"] == "ingress":
            p["tables"] = [{
                "name": "t", "id": 0, "match_type": "lpm",
                "key": [], "actions": [], "next_tables": {},
                "default_entry": {"action_name": "x", "action_data": []},
            }]
            p["init_table"] = "t"
    with pytest.raises(UnsupportedConstruct) as exc:
        load_program(json.dumps(doc))
    assert "lpm" in str(exc.value)


def test_malformed_json():
    with pytest.raises(MalformedDocument):
        load_program("{ not json")


def test_unreachable_parser_state():
    doc = minimal_program_doc()
    doc["parsers"][0]["parse_states"].append({
        "name": "orphan", "id": 7, "parser_ops": [], "transition_key": [], "transitions": []})
    with pytest.raises(UnreachableState):
        load_program(json.dumps(doc))


def test_dangling_transition_target():
    doc = minimal_program_doc()
    doc["parsers"][0]["parse_states"][0]["transitions"] = [
        {"type": "default", "value": None, "mask": None, "next_state": "nowhere"}]
    with pytest.raises(DanglingReference):
        load_program(json.dumps(doc))


def test_metadata_contract_enforced():
    doc = minimal_program_doc()
    doc["headers"] = [h for h in doc["headers"] if h["name"] != "qcontrol_metadata"]
    with pytest.raises(MalformedDocument) as exc:
        load_program(json.dumps(doc))
    assert "qcontrol_metadata" in str(exc.value)


def test_cyclic_control_flow_rejected():
    b = ProgramBuilder()
    b.declare_target_metadata()
    b.header_type("h_t", [("x", 8)])
    b.header("h", "h_t")
    b.parser().state("start")
    b.deparser("deparser", [])
    b.action("nop")
    pipe = b.pipeline("ingress", init="a")
    pipe.table("a", actions=["nop"], default="nop", next_tables={"nop": "b"})
    pipe.table("b", actions=["nop"], default="nop", next_tables={"nop": "a"})
    b.pipeline("egress")
    b.pipeline("qcontrol")
    with pytest.raises(UnsupportedConstruct) as exc:
        b.build()
    assert "cyclic" in str(exc.value)


def test_round_trip_identity():
    text = json.dumps(minimal_program_doc())
    prog = load_program(text)
    assert load_program(serialize_program(prog)) == prog


def test_serialization_fixed_point():
    text = json.dumps(minimal_program_doc())
    once = serialize_program(load_program(text))
    twice = serialize_program(load_program(once))
    assert once == twice


def test_order_independence():
    doc = minimal_program_doc()
    rng = random.Random(7)
    for key in ("header_types", "headers", "actions", "register_arrays", "pipelines"):
        if key in doc and isinstance(doc[key], list):
            rng.shuffle(doc[key])
    shuffled = load_program(json.dumps(doc))
    original = load_program(json.dumps(minimal_program_doc()))
    assert shuffled == original


def test_register_array_round_trip():
    b = ProgramBuilder()
    b.declare_target_metadata()
    b.header_type("h_t", [("x", 8)])
    b.header("h", "h_t")
    b.parser().state("start")
    b.deparser("deparser", [])
    b.register("r", 16, 8)
    for name in ("ingress", "egress", "qcontrol"):
        b.pipeline(name)
    prog = b.build()
    doc = serialize_document(prog)
    assert doc["register_arrays"] == [{"name": "r", "id": 0, "bitwidth": 16, "size": 8}]
    assert load_program(json.dumps(doc)) == prog


def _mutate(doc, rng):
    """Return a randomly broken copy of a valid document."""
    doc = copy.deepcopy(doc)
    choice = rng.randrange(6)
    if choice == 0:
        doc["counters"] = [{"name": "c"}]
    elif choice == 1:
        doc["header_types"].append({"name": "z_t", "id": 50, "fields": [["f", rng.choice([0, 70, 999])]]})
    elif choice == 2:
        doc["headers"].append({"name": "zz", "id": 50, "header_type": "missing_t"})
    elif choice == 3:
        doc["actions"] = [{"name": "a", "id": 0, "runtime_data": [],
                           "primitives": [{"op": "clone_egress", "parameters": []}]}]
    elif choice == 4:
        doc["parsers"][0]["init_state"] = "missing"
    else:
        doc["pipelines"] = doc["pipelines"][:1]
    return doc


def test_rejection_is_total():
    rng = random.Random(123)
    base = minimal_program_doc()
    for _ in range(60):
        broken = _mutate(base, rng)
        with pytest.raises(ProgramValidationError):
            load_program(json.dumps(broken))


def test_builder_matches_loaded_document():
    b = ProgramBuilder()
    b.declare_target_metadata()
    b.header_type("probe_t", [("kind", 8)])
    b.header("probe", "probe_t")
    b.parser("parser", start="start").state("start")
    b.deparser("deparser", [])
    for name in ("ingress", "egress", "qcontrol"):
        b.pipeline(name)
    built = b.build()
    loaded = load_program(json.dumps(minimal_program_doc()))
    assert built == loaded


def test_builder_one_table_round_trip():
    b = ProgramBuilder()
    b.declare_target_metadata()
    b.header_type("h_t", [("x", 16)])
    b.header("h", "h_t")
    p = b.parser()
    p.state("start", extracts=["h"])
    b.deparser("deparser", ["h"])
    b.action("nop")
    b.action("set_x", params=[("v", 16)]).assign(("h", "x"), RT(0))
    pipe = b.pipeline("ingress", init="t")
    t = pipe.table("t", key=[("h", "x")], actions=["set_x", "nop"], default="nop",
                   next_tables={"set_x": None, "nop": None})
    t.const_entry([7], "set_x", [42])
    b.pipeline("egress")
    b.pipeline("qcontrol")
    prog = b.build()
    assert load_program(serialize_program(prog)) == prog
