"""Load, validate, and serialize the supported subset of the BMv2 program format.

The subset covers exactly what the shipped protocol programs need:
header_types, headers (including metadata instances), enums, parsers,
deparsers, actions, pipelines (exact-match tables and conditionals), and
register_arrays. Anything else in a document is rejected with a diagnostic
naming the construct and its JSON-pointer-style location.

Loading normalizes the program: unordered arrays are sorted by name and ids
are ignored (serialization reassigns them densely), so structural equality of
two ``PipelineProgram`` values is insensitive to array permutation.
"""

from __future__ import annotations

import json

from .errors import (
    DanglingReference,
    MalformedDocument,
    ProgramValidationError,
    UnreachableState,
    UnsupportedConstruct,
    WidthOutOfRange,
)
from .ir import (
    ARITH_OPS,
    COMPARE_OPS,
    LOGICAL_OPS,
    MAX_FIELD_WIDTH,
    REQUIRED_PIPELINES,
    ActionDef,
    BinOp,
    BoolConst,
    ConditionalDef,
    Const,
    DeparserDef,
    EnumDef,
    Expr,
    FieldRef,
    HeaderInstance,
    HeaderTypeDef,
    ParserDef,
    ParserState,
    ParserTransition,
    PipelineDef,
    PipelineProgram,
    Primitive,
    RegisterArrayDef,
    RegisterRef,
    RuntimeRef,
    TableConstEntry,
    TableDef,
    TernaryOp,
    UnaryOp,
    ValidRef,
)

_TOP_LEVEL_KEYS = (
    "target",
    "header_types",
    "headers",
    "enums",
    "parsers",
    "deparsers",
    "actions",
    "pipelines",
    "register_arrays",
)

_PRIMITIVE_OPS = ("assign", "register_read", "register_write", "add_header", "remove_header")

_EXPR_OPS = ARITH_OPS + COMPARE_OPS + LOGICAL_OPS + ("~", "not", "valid", "?")

# Metadata instances every program for a given target must declare, with
# bit-exact field widths. The quantum target's records mirror the device
# architecture; enum-typed fields travel as 8-bit integers.
REQUIRED_METADATA: dict[str, dict[str, tuple[tuple[str, int], ...]]] = {
    "v1quantum": {
        "standard_metadata": (
            ("ingress_port", 9),
            ("egress_spec", 9),
            ("egress_port", 9),
        ),
        "xconnect_metadata": (
            ("pathway", 8),
            ("ingress_port", 9),
            ("egress_spec", 9),
            ("bsm_grp", 16),
            ("bsm_info", 16),
        ),
        "qcontrol_metadata": (
            ("event_type", 8),
            ("event_timestamp", 64),
            ("operation", 8),
            ("release_qubit", 9),
            ("swap_bsm_id", 16),
            ("swap_qubit_0", 9),
            ("swap_qubit_1", 9),
            ("bsm_id", 16),
            ("bsm_success", 1),
            ("bsm_bell_index", 2),
        ),
    },
    "classical": {
        "standard_metadata": (
            ("ingress_port", 9),
            ("egress_spec", 9),
            ("egress_port", 9),
        ),
    },
}


# --------------------------------------------------------------------------
# Document walking helpers

def _require(cond: bool, exc: type[ProgramValidationError], msg: str, path: str):
    if not cond:
        raise exc(msg, path)


def _obj(node, path: str) -> dict:
    _require(isinstance(node, dict), MalformedDocument, "expected an object", path)
    return node


def _arr(node, path: str) -> list:
    _require(isinstance(node, list), MalformedDocument, "expected an array", path)
    return node


def _str(node, path: str) -> str:
    _require(isinstance(node, str), MalformedDocument, "expected a string", path)
    return node


def _int(node, path: str) -> int:
    _require(isinstance(node, int) and not isinstance(node, bool), MalformedDocument,
             "expected an integer", path)
    return node


def _get(obj: dict, key: str, path: str):
    _require(key in obj, MalformedDocument, f"missing required key '{key}'", path)
    return obj[key]


def _check_keys(obj: dict, allowed: tuple[str, ...], optional: tuple[str, ...], path: str):
    for key in obj:
        if key not in allowed and key not in optional:
            raise UnsupportedConstruct(key, f"{path}/{key}")


def _hexstr(node, path: str) -> int:
    s = _str(node, path)
    try:
        return int(s, 16)
    except ValueError:
        raise MalformedDocument(f"invalid hexstr {s!r}", path) from None


# --------------------------------------------------------------------------
# Expression parsing

def _parse_expr(node, enums: dict[str, dict[str, int]], path: str) -> Expr:
    obj = _obj(node, path)
    etype = _str(_get(obj, "type", path), f"{path}/type")
    value = _get(obj, "value", path)
    if etype == "hexstr":
        return Const(_hexstr(value, f"{path}/value"))
    if etype == "bool":
        _require(isinstance(value, bool), MalformedDocument, "expected a boolean", f"{path}/value")
        return BoolConst(value)
    if etype == "field":
        arr = _arr(value, f"{path}/value")
        _require(len(arr) == 2, MalformedDocument, "field ref needs [header, field]", f"{path}/value")
        return FieldRef(_str(arr[0], f"{path}/value/0"), _str(arr[1], f"{path}/value/1"))
    if etype == "runtime_data":
        return RuntimeRef(_int(value, f"{path}/value"))
    if etype == "register":
        arr = _arr(value, f"{path}/value")
        _require(len(arr) == 2, MalformedDocument, "register ref needs [array, index]", f"{path}/value")
        return RegisterRef(_str(arr[0], f"{path}/value/0"),
                           _parse_expr(arr[1], enums, f"{path}/value/1"))
    if etype == "enum":
        arr = _arr(value, f"{path}/value")
        _require(len(arr) == 2, MalformedDocument, "enum ref needs [enum, member]", f"{path}/value")
        ename, member = _str(arr[0], f"{path}/value/0"), _str(arr[1], f"{path}/value/1")
        if ename not in enums:
            raise DanglingReference(f"unknown enum '{ename}'", f"{path}/value/0")
        if member not in enums[ename]:
            raise DanglingReference(f"unknown member '{ename}.{member}'", f"{path}/value/1")
        return Const(enums[ename][member])
    if etype == "expression":
        inner = _obj(value, f"{path}/value")
        op = _str(_get(inner, "op", f"{path}/value"), f"{path}/value/op")
        if op not in _EXPR_OPS:
            raise UnsupportedConstruct(f"expression op '{op}'", f"{path}/value/op")
        if op == "?":
            return TernaryOp(
                _parse_expr(_get(inner, "cond", f"{path}/value"), enums, f"{path}/value/cond"),
                _parse_expr(_get(inner, "left", f"{path}/value"), enums, f"{path}/value/left"),
                _parse_expr(_get(inner, "right", f"{path}/value"), enums, f"{path}/value/right"),
            )
        if op == "valid":
            hdr = _obj(_get(inner, "right", f"{path}/value"), f"{path}/value/right")
            _require(hdr.get("type") == "header", MalformedDocument,
                     "'valid' expects a header operand", f"{path}/value/right")
            return ValidRef(_str(_get(hdr, "value", f"{path}/value/right"), f"{path}/value/right/value"))
        if op in ("~", "not"):
            return UnaryOp(op, _parse_expr(_get(inner, "right", f"{path}/value"),
                                           enums, f"{path}/value/right"))
        return BinOp(
            op,
            _parse_expr(_get(inner, "left", f"{path}/value"), enums, f"{path}/value/left"),
            _parse_expr(_get(inner, "right", f"{path}/value"), enums, f"{path}/value/right"),
        )
    raise UnsupportedConstruct(f"expression operand type '{etype}'", f"{path}/type")


def _serialize_expr(expr: Expr) -> dict:
    if isinstance(expr, Const):
        return {"type": "hexstr", "value": hex(expr.value)}
    if isinstance(expr, BoolConst):
        return {"type": "bool", "value": expr.value}
    if isinstance(expr, FieldRef):
        return {"type": "field", "value": [expr.header, expr.field]}
    if isinstance(expr, RuntimeRef):
        return {"type": "runtime_data", "value": expr.index}
    if isinstance(expr, RegisterRef):
        return {"type": "register", "value": [expr.array, _serialize_expr(expr.index)]}
    if isinstance(expr, ValidRef):
        return {"type": "expression", "value": {
            "op": "valid", "left": None, "right": {"type": "header", "value": expr.header}}}
    if isinstance(expr, UnaryOp):
        return {"type": "expression", "value": {
            "op": expr.op, "left": None, "right": _serialize_expr(expr.operand)}}
    if isinstance(expr, TernaryOp):
        return {"type": "expression", "value": {
            "op": "?", "cond": _serialize_expr(expr.cond),
            "left": _serialize_expr(expr.if_true), "right": _serialize_expr(expr.if_false)}}
    if isinstance(expr, BinOp):
        return {"type": "expression", "value": {
            "op": expr.op, "left": _serialize_expr(expr.left),
            "right": _serialize_expr(expr.right)}}
    raise TypeError(f"not an expression: {expr!r}")


# --------------------------------------------------------------------------
# Document -> IR

def _parse_header_types(doc, path) -> tuple[HeaderTypeDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "fields"), ("id",), p)
        fields = []
        for j, fnode in enumerate(_arr(_get(obj, "fields", p), f"{p}/fields")):
            fp = f"{p}/fields/{j}"
            fa = _arr(fnode, fp)
            _require(len(fa) == 2, MalformedDocument, "field needs [name, width]", fp)
            if not isinstance(fa[1], int) or isinstance(fa[1], bool):
                raise UnsupportedConstruct("non-integer field width (varbit?)", f"{fp}/1")
            fields.append((_str(fa[0], f"{fp}/0"), fa[1]))
        out.append(HeaderTypeDef(_str(_get(obj, "name", p), f"{p}/name"), tuple(fields)))
    return tuple(sorted(out, key=lambda h: h.name))


def _parse_headers(doc, path) -> tuple[HeaderInstance, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "header_type"), ("id", "metadata"), p)
        meta = obj.get("metadata", False)
        _require(isinstance(meta, bool), MalformedDocument, "metadata must be boolean", f"{p}/metadata")
        out.append(HeaderInstance(
            _str(_get(obj, "name", p), f"{p}/name"),
            _str(_get(obj, "header_type", p), f"{p}/header_type"),
            meta,
        ))
    return tuple(sorted(out, key=lambda h: h.name))


def _parse_enums(doc, path) -> tuple[EnumDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "entries"), ("id",), p)
        members = []
        for j, mnode in enumerate(_arr(_get(obj, "entries", p), f"{p}/entries")):
            mp = f"{p}/entries/{j}"
            ma = _arr(mnode, mp)
            _require(len(ma) == 2, MalformedDocument, "enum entry needs [name, value]", mp)
            members.append((_str(ma[0], f"{mp}/0"), _int(ma[1], f"{mp}/1")))
        out.append(EnumDef(_str(_get(obj, "name", p), f"{p}/name"),
                           tuple(sorted(members))))
    return tuple(sorted(out, key=lambda e: e.name))


def _parse_parsers(doc, path, enums) -> tuple[ParserDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "init_state", "parse_states"), ("id",), p)
        states = []
        for j, snode in enumerate(_arr(_get(obj, "parse_states", p), f"{p}/parse_states")):
            sp = f"{p}/parse_states/{j}"
            sobj = _obj(snode, sp)
            _check_keys(sobj, ("name",), ("id", "parser_ops", "transition_key", "transitions"), sp)
            extracts = []
            for k, onode in enumerate(_arr(sobj.get("parser_ops", []), f"{sp}/parser_ops")):
                op_path = f"{sp}/parser_ops/{k}"
                oobj = _obj(onode, op_path)
                op = _str(_get(oobj, "op", op_path), f"{op_path}/op")
                if op != "extract":
                    raise UnsupportedConstruct(f"parser op '{op}'", f"{op_path}/op")
                params = _arr(_get(oobj, "parameters", op_path), f"{op_path}/parameters")
                _require(len(params) == 1, MalformedDocument, "extract takes one parameter", op_path)
                pobj = _obj(params[0], f"{op_path}/parameters/0")
                if pobj.get("type") != "regular":
                    raise UnsupportedConstruct(f"extract target type '{pobj.get('type')}'",
                                               f"{op_path}/parameters/0")
                extracts.append(_str(_get(pobj, "value", op_path), f"{op_path}/parameters/0/value"))
            key = []
            for k, knode in enumerate(_arr(sobj.get("transition_key", []), f"{sp}/transition_key")):
                kp = f"{sp}/transition_key/{k}"
                kobj = _obj(knode, kp)
                if kobj.get("type") != "field":
                    raise UnsupportedConstruct(f"transition key type '{kobj.get('type')}'", kp)
                arr = _arr(_get(kobj, "value", kp), f"{kp}/value")
                _require(len(arr) == 2, MalformedDocument, "field ref needs [header, field]", kp)
                key.append(FieldRef(_str(arr[0], kp), _str(arr[1], kp)))
            transitions = []
            for k, tnode in enumerate(_arr(sobj.get("transitions", []), f"{sp}/transitions")):
                tp = f"{sp}/transitions/{k}"
                tobj = _obj(tnode, tp)
                ttype = _str(_get(tobj, "type", tp), f"{tp}/type")
                if tobj.get("mask") is not None:
                    raise UnsupportedConstruct("masked transition", f"{tp}/mask")
                nxt = tobj.get("next_state")
                if nxt is not None:
                    nxt = _str(nxt, f"{tp}/next_state")
                if ttype == "hexstr":
                    transitions.append(ParserTransition(_hexstr(_get(tobj, "value", tp),
                                                                f"{tp}/value"), nxt))
                elif ttype == "default":
                    transitions.append(ParserTransition(None, nxt))
                else:
                    raise UnsupportedConstruct(f"transition type '{ttype}'", f"{tp}/type")
            transitions.sort(key=lambda t: (t.value is None, t.value if t.value is not None else 0))
            states.append(ParserState(_str(_get(sobj, "name", sp), f"{sp}/name"),
                                      tuple(extracts), tuple(key), tuple(transitions)))
        out.append(ParserDef(
            _str(_get(obj, "name", p), f"{p}/name"),
            _str(_get(obj, "init_state", p), f"{p}/init_state"),
            tuple(sorted(states, key=lambda s: s.name)),
        ))
    return tuple(sorted(out, key=lambda x: x.name))


def _parse_deparsers(doc, path) -> tuple[DeparserDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "order"), ("id",), p)
        order = tuple(_str(h, f"{p}/order/{j}")
                      for j, h in enumerate(_arr(_get(obj, "order", p), f"{p}/order")))
        out.append(DeparserDef(_str(_get(obj, "name", p), f"{p}/name"), order))
    return tuple(sorted(out, key=lambda d: d.name))


def _parse_actions(doc, path, enums) -> tuple[ActionDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name",), ("id", "runtime_data", "primitives"), p)
        params = []
        for j, rnode in enumerate(_arr(obj.get("runtime_data", []), f"{p}/runtime_data")):
            rp = f"{p}/runtime_data/{j}"
            robj = _obj(rnode, rp)
            _check_keys(robj, ("name", "bitwidth"), ("id",), rp)
            params.append((_str(_get(robj, "name", rp), f"{rp}/name"),
                           _int(_get(robj, "bitwidth", rp), f"{rp}/bitwidth")))
        prims = []
        for j, pnode in enumerate(_arr(obj.get("primitives", []), f"{p}/primitives")):
            pp = f"{p}/primitives/{j}"
            pobj = _obj(pnode, pp)
            op = _str(_get(pobj, "op", pp), f"{pp}/op")
            if op not in _PRIMITIVE_OPS:
                raise UnsupportedConstruct(f"primitive '{op}'", f"{pp}/op")
            raw_args = _arr(_get(pobj, "parameters", pp), f"{pp}/parameters")
            args: list[object] = []
            if op == "assign":
                _require(len(raw_args) == 2, MalformedDocument, "assign takes [dest, src]", pp)
                dest = _parse_expr(raw_args[0], enums, f"{pp}/parameters/0")
                _require(isinstance(dest, FieldRef), MalformedDocument,
                         "assign destination must be a field", f"{pp}/parameters/0")
                args = [dest, _parse_expr(raw_args[1], enums, f"{pp}/parameters/1")]
            elif op == "register_read":
                _require(len(raw_args) == 3, MalformedDocument,
                         "register_read takes [dest, array, index]", pp)
                dest = _parse_expr(raw_args[0], enums, f"{pp}/parameters/0")
                _require(isinstance(dest, FieldRef), MalformedDocument,
                         "register_read destination must be a field", f"{pp}/parameters/0")
                args = [dest, _reg_array(raw_args[1], f"{pp}/parameters/1"),
                        _parse_expr(raw_args[2], enums, f"{pp}/parameters/2")]
            elif op == "register_write":
                _require(len(raw_args) == 3, MalformedDocument,
                         "register_write takes [array, index, value]", pp)
                args = [_reg_array(raw_args[0], f"{pp}/parameters/0"),
                        _parse_expr(raw_args[1], enums, f"{pp}/parameters/1"),
                        _parse_expr(raw_args[2], enums, f"{pp}/parameters/2")]
            else:  # add_header / remove_header
                _require(len(raw_args) == 1, MalformedDocument, f"{op} takes [header]", pp)
                hobj = _obj(raw_args[0], f"{pp}/parameters/0")
                if hobj.get("type") != "header":
                    raise UnsupportedConstruct(f"{op} target type '{hobj.get('type')}'",
                                               f"{pp}/parameters/0")
                args = [_str(_get(hobj, "value", pp), f"{pp}/parameters/0/value")]
            prims.append(Primitive(op, tuple(args)))
        out.append(ActionDef(_str(_get(obj, "name", p), f"{p}/name"),
                             tuple(params), tuple(prims)))
    return tuple(sorted(out, key=lambda a: a.name))


def _reg_array(node, path: str) -> str:
    obj = _obj(node, path)
    if obj.get("type") != "register_array":
        raise UnsupportedConstruct(f"register operand type '{obj.get('type')}'", path)
    return _str(_get(obj, "value", path), f"{path}/value")


def _parse_pipelines(doc, path, enums) -> tuple[PipelineDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name",), ("id", "init_table", "tables", "conditionals"), p)
        tables = []
        for j, tnode in enumerate(_arr(obj.get("tables", []), f"{p}/tables")):
            tp = f"{p}/tables/{j}"
            tobj = _obj(tnode, tp)
            _check_keys(tobj, ("name", "actions", "default_entry"),
                        ("id", "key", "match_type", "next_tables", "entries"), tp)
            if tobj.get("match_type", "exact") != "exact":
                raise UnsupportedConstruct(f"match_type '{tobj['match_type']}'", f"{tp}/match_type")
            key = []
            for k, knode in enumerate(_arr(tobj.get("key", []), f"{tp}/key")):
                kp = f"{tp}/key/{k}"
                kobj = _obj(knode, kp)
                if kobj.get("match_type", "exact") != "exact":
                    raise UnsupportedConstruct(f"match_type '{kobj['match_type']}'", kp)
                arr = _arr(_get(kobj, "target", kp), f"{kp}/target")
                _require(len(arr) == 2, MalformedDocument, "key target needs [header, field]", kp)
                key.append(FieldRef(_str(arr[0], kp), _str(arr[1], kp)))
            actions = tuple(_str(a, f"{tp}/actions/{k}")
                            for k, a in enumerate(_arr(_get(tobj, "actions", tp), f"{tp}/actions")))
            de = _obj(_get(tobj, "default_entry", tp), f"{tp}/default_entry")
            default_action = _str(_get(de, "action_name", tp), f"{tp}/default_entry/action_name")
            default_params = tuple(_hexstr(v, f"{tp}/default_entry/action_data/{k}")
                                   for k, v in enumerate(_arr(de.get("action_data", []),
                                                              f"{tp}/default_entry/action_data")))
            nt = _obj(tobj.get("next_tables", {}), f"{tp}/next_tables")
            next_tables = []
            for aname, nxt in nt.items():
                if nxt is not None:
                    nxt = _str(nxt, f"{tp}/next_tables/{aname}")
                next_tables.append((aname, nxt))
            next_tables.sort()
            entries = []
            for k, enode in enumerate(_arr(tobj.get("entries", []), f"{tp}/entries")):
                ep = f"{tp}/entries/{k}"
                eobj = _obj(enode, ep)
                _check_keys(eobj, ("key", "action_name"), ("action_data",), ep)
                ekey = tuple(_hexstr(v, f"{ep}/key/{m}")
                             for m, v in enumerate(_arr(_get(eobj, "key", ep), f"{ep}/key")))
                eparams = tuple(_hexstr(v, f"{ep}/action_data/{m}")
                                for m, v in enumerate(_arr(eobj.get("action_data", []),
                                                           f"{ep}/action_data")))
                entries.append(TableConstEntry(
                    ekey, _str(_get(eobj, "action_name", ep), f"{ep}/action_name"), eparams))
            entries.sort(key=lambda e: e.key)
            tables.append(TableDef(
                _str(_get(tobj, "name", tp), f"{tp}/name"),
                tuple(key), actions, default_action, default_params,
                tuple(next_tables), tuple(entries)))
        conds = []
        for j, cnode in enumerate(_arr(obj.get("conditionals", []), f"{p}/conditionals")):
            cp = f"{p}/conditionals/{j}"
            cobj = _obj(cnode, cp)
            _check_keys(cobj, ("name", "expression"), ("id", "true_next", "false_next"), cp)
            tn = cobj.get("true_next")
            fn = cobj.get("false_next")
            conds.append(ConditionalDef(
                _str(_get(cobj, "name", cp), f"{cp}/name"),
                _parse_expr(_get(cobj, "expression", cp), enums, f"{cp}/expression"),
                _str(tn, f"{cp}/true_next") if tn is not None else None,
                _str(fn, f"{cp}/false_next") if fn is not None else None))
        init = obj.get("init_table")
        out.append(PipelineDef(
            _str(_get(obj, "name", p), f"{p}/name"),
            _str(init, f"{p}/init_table") if init is not None else None,
            tuple(sorted(tables, key=lambda t: t.name)),
            tuple(sorted(conds, key=lambda c: c.name))))
    return tuple(sorted(out, key=lambda x: x.name))


def _parse_registers(doc, path) -> tuple[RegisterArrayDef, ...]:
    out = []
    for i, node in enumerate(_arr(doc, path)):
        p = f"{path}/{i}"
        obj = _obj(node, p)
        _check_keys(obj, ("name", "bitwidth", "size"), ("id",), p)
        out.append(RegisterArrayDef(
            _str(_get(obj, "name", p), f"{p}/name"),
            _int(_get(obj, "bitwidth", p), f"{p}/bitwidth"),
            _int(_get(obj, "size", p), f"{p}/size")))
    return tuple(sorted(out, key=lambda r: r.name))


def load_document(doc: dict) -> PipelineProgram:
    """Build and validate a PipelineProgram from an already-parsed JSON object."""
    obj = _obj(doc, "/")
    _check_keys(obj, (), _TOP_LEVEL_KEYS, "")
    target = obj.get("target", "v1quantum")
    if target not in REQUIRED_PIPELINES:
        raise UnsupportedConstruct(f"target '{target}'", "/target")
    enums = _parse_enums(obj.get("enums", []), "/enums")
    enum_map = {e.name: dict(e.members) for e in enums}
    prog = PipelineProgram(
        target=target,
        header_types=_parse_header_types(obj.get("header_types", []), "/header_types"),
        headers=_parse_headers(obj.get("headers", []), "/headers"),
        enums=enums,
        parsers=_parse_parsers(obj.get("parsers", []), "/parsers", enum_map),
        deparsers=_parse_deparsers(obj.get("deparsers", []), "/deparsers"),
        actions=_parse_actions(obj.get("actions", []), "/actions", enum_map),
        pipelines=_parse_pipelines(obj.get("pipelines", []), "/pipelines", enum_map),
        register_arrays=_parse_registers(obj.get("register_arrays", []), "/register_arrays"),
    )
    validate_program(prog)
    return prog


def load_program(program_text: str) -> PipelineProgram:
    """Parse a program document into a validated PipelineProgram."""
    try:
        doc = json.loads(program_text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    return load_document(doc)


# --------------------------------------------------------------------------
# Validation

def _validate_expr(expr: Expr, prog: PipelineProgram, n_params: int, path: str):
    if isinstance(expr, (Const, BoolConst)):
        return
    if isinstance(expr, FieldRef):
        try:
            prog.field_width(expr.header, expr.field)
        except KeyError:
            raise DanglingReference(f"unknown field '{expr.header}.{expr.field}'", path) from None
        return
    if isinstance(expr, RuntimeRef):
        if not 0 <= expr.index < n_params:
            raise DanglingReference(f"runtime_data index {expr.index} out of range", path)
        return
    if isinstance(expr, RegisterRef):
        try:
            prog.register_array(expr.array)
        except KeyError:
            raise DanglingReference(f"unknown register array '{expr.array}'", path) from None
        _validate_expr(expr.index, prog, n_params, path)
        return
    if isinstance(expr, ValidRef):
        try:
            prog.header(expr.header)
        except KeyError:
            raise DanglingReference(f"unknown header '{expr.header}'", path) from None
        return
    if isinstance(expr, UnaryOp):
        _validate_expr(expr.operand, prog, n_params, path)
        return
    if isinstance(expr, BinOp):
        _validate_expr(expr.left, prog, n_params, path)
        _validate_expr(expr.right, prog, n_params, path)
        return
    if isinstance(expr, TernaryOp):
        _validate_expr(expr.cond, prog, n_params, path)
        _validate_expr(expr.if_true, prog, n_params, path)
        _validate_expr(expr.if_false, prog, n_params, path)
        return
    raise MalformedDocument(f"not an expression: {expr!r}", path)


def _assigned_const_fields(action: ActionDef) -> dict[tuple[str, str], int]:
    out = {}
    for prim in action.primitives:
        if prim.op == "assign" and isinstance(prim.args[1], Const):
            dest = prim.args[0]
            out[(dest.header, dest.field)] = prim.args[1].value
    return out


def validate_program(prog: PipelineProgram):
    """Check every structural invariant; raises a ProgramValidationError subclass."""
    # Header types: unique names, unique field names, widths in range, positive total.
    seen = set()
    for ht in prog.header_types:
        if ht.name in seen:
            raise MalformedDocument(f"duplicate header type '{ht.name}'", "/header_types")
        seen.add(ht.name)
        fnames = set()
        for fname, width in ht.fields:
            if fname in fnames:
                raise MalformedDocument(f"duplicate field '{ht.name}.{fname}'", "/header_types")
            fnames.add(fname)
            if not 1 <= width <= MAX_FIELD_WIDTH:
                raise WidthOutOfRange(f"field '{ht.name}.{fname}' width {width}", "/header_types")
        if ht.total_width() <= 0:
            raise WidthOutOfRange(f"header type '{ht.name}' has zero width", "/header_types")

    seen = set()
    for h in prog.headers:
        if h.name in seen:
            raise MalformedDocument(f"duplicate header '{h.name}'", "/headers")
        seen.add(h.name)
        try:
            prog.header_type(h.header_type)
        except KeyError:
            raise DanglingReference(f"header '{h.name}' uses unknown type '{h.header_type}'",
                                    "/headers") from None

    seen = set()
    for e in prog.enums:
        if e.name in seen:
            raise MalformedDocument(f"duplicate enum '{e.name}'", "/enums")
        seen.add(e.name)
        mnames = set()
        for mname, _ in e.members:
            if mname in mnames:
                raise MalformedDocument(f"duplicate enum member '{e.name}.{mname}'", "/enums")
            mnames.add(mname)

    seen = set()
    for r in prog.register_arrays:
        if r.name in seen:
            raise MalformedDocument(f"duplicate register array '{r.name}'", "/register_arrays")
        seen.add(r.name)
        if not 1 <= r.width <= MAX_FIELD_WIDTH:
            raise WidthOutOfRange(f"register array '{r.name}' width {r.width}", "/register_arrays")
        if r.size < 1:
            raise MalformedDocument(f"register array '{r.name}' size {r.size}", "/register_arrays")

    for parser in prog.parsers:
        _validate_parser(parser, prog)

    for dep in prog.deparsers:
        seen_emit = set()
        for hname in dep.order:
            try:
                h = prog.header(hname)
            except KeyError:
                raise DanglingReference(f"deparser '{dep.name}' emits unknown header '{hname}'",
                                        "/deparsers") from None
            if h.metadata:
                raise MalformedDocument(
                    f"deparser '{dep.name}' emits metadata '{hname}'", "/deparsers")
            if hname in seen_emit:
                raise MalformedDocument(
                    f"deparser '{dep.name}' emits '{hname}' twice", "/deparsers")
            seen_emit.add(hname)

    seen = set()
    for action in prog.actions:
        if action.name in seen:
            raise MalformedDocument(f"duplicate action '{action.name}'", "/actions")
        seen.add(action.name)
        apath = f"/actions/{action.name}"
        for pname, width in action.params:
            if not 1 <= width <= MAX_FIELD_WIDTH:
                raise WidthOutOfRange(f"param '{action.name}.{pname}' width {width}", apath)
        n = len(action.params)
        for prim in action.primitives:
            if prim.op == "assign":
                _validate_expr(prim.args[0], prog, n, apath)
                _validate_expr(prim.args[1], prog, n, apath)
            elif prim.op == "register_read":
                _validate_expr(prim.args[0], prog, n, apath)
                try:
                    prog.register_array(prim.args[1])
                except KeyError:
                    raise DanglingReference(
                        f"unknown register array '{prim.args[1]}'", apath) from None
                _validate_expr(prim.args[2], prog, n, apath)
            elif prim.op == "register_write":
                try:
                    prog.register_array(prim.args[0])
                except KeyError:
                    raise DanglingReference(
                        f"unknown register array '{prim.args[0]}'", apath) from None
                _validate_expr(prim.args[1], prog, n, apath)
                _validate_expr(prim.args[2], prog, n, apath)
            else:  # add_header / remove_header
                try:
                    h = prog.header(prim.args[0])
                except KeyError:
                    raise DanglingReference(f"unknown header '{prim.args[0]}'", apath) from None
                if h.metadata:
                    raise MalformedDocument(
                        f"{prim.op} on metadata '{prim.args[0]}'", apath)

    required = REQUIRED_PIPELINES[prog.target]
    have = tuple(sorted(p.name for p in prog.pipelines))
    if have != required:
        raise MalformedDocument(
            f"target '{prog.target}' requires pipelines {list(required)}, found {list(have)}",
            "/pipelines")
    global_nodes = set()
    for pipe in prog.pipelines:
        _validate_pipeline(pipe, prog)
        # Table management is keyed by table name alone, so names must be
        # unique across pipelines, not just within one.
        for t in pipe.tables:
            if t.name in global_nodes:
                raise MalformedDocument(
                    f"table '{t.name}' defined in more than one pipeline", "/pipelines")
            global_nodes.add(t.name)

    _validate_target_metadata(prog)


def _validate_parser(parser: ParserDef, prog: PipelineProgram):
    path = f"/parsers/{parser.name}"
    names = {s.name for s in parser.states}
    if len(names) != len(parser.states):
        raise MalformedDocument(f"duplicate parser state in '{parser.name}'", path)
    if parser.start not in names:
        raise DanglingReference(f"init_state '{parser.start}' not a state", path)
    for state in parser.states:
        spath = f"{path}/{state.name}"
        for hname in state.extracts:
            try:
                h = prog.header(hname)
            except KeyError:
                raise DanglingReference(f"extract of unknown header '{hname}'", spath) from None
            if h.metadata:
                raise MalformedDocument(f"extract of metadata '{hname}'", spath)
        for ref in state.key:
            try:
                prog.field_width(ref.header, ref.field)
            except KeyError:
                raise DanglingReference(
                    f"unknown key field '{ref.header}.{ref.field}'", spath) from None
        if state.transitions and not state.key:
            non_default = [t for t in state.transitions if t.value is not None]
            if non_default:
                raise MalformedDocument("value transitions without a transition key", spath)
        key_width = sum(prog.field_width(r.header, r.field) for r in state.key)
        seen_vals = set()
        defaults = 0
        for t in state.transitions:
            if t.value is None:
                defaults += 1
            else:
                if t.value in seen_vals:
                    raise MalformedDocument(f"duplicate transition value {t.value}", spath)
                seen_vals.add(t.value)
                if t.value >= (1 << key_width):
                    raise WidthOutOfRange(
                        f"transition value {t.value} exceeds key width {key_width}", spath)
            if t.next_state is not None and t.next_state not in names:
                raise DanglingReference(f"transition to unknown state '{t.next_state}'", spath)
        if defaults > 1:
            raise MalformedDocument("multiple default transitions", spath)
    # Reachability from start.
    by_name = {s.name: s for s in parser.states}
    reached = set()
    frontier = [parser.start]
    while frontier:
        cur = frontier.pop()
        if cur in reached:
            continue
        reached.add(cur)
        for t in by_name[cur].transitions:
            if t.next_state is not None and t.next_state not in reached:
                frontier.append(t.next_state)
    unreachable = names - reached
    if unreachable:
        raise UnreachableState(
            f"parser state(s) unreachable from start: {sorted(unreachable)}", path)


def _validate_pipeline(pipe: PipelineDef, prog: PipelineProgram):
    path = f"/pipelines/{pipe.name}"
    nodes: dict[str, object] = {}
    for t in pipe.tables:
        if t.name in nodes:
            raise MalformedDocument(f"duplicate node '{t.name}'", path)
        nodes[t.name] = t
    for c in pipe.conditionals:
        if c.name in nodes:
            raise MalformedDocument(f"duplicate node '{c.name}'", path)
        nodes[c.name] = c
    if pipe.init_node is not None and pipe.init_node not in nodes:
        raise DanglingReference(f"init node '{pipe.init_node}' not defined", path)

    for t in pipe.tables:
        tpath = f"{path}/{t.name}"
        widths = []
        for ref in t.key:
            try:
                widths.append(prog.field_width(ref.header, ref.field))
            except KeyError:
                raise DanglingReference(
                    f"unknown key field '{ref.header}.{ref.field}'", tpath) from None
        action_names = set()
        for aname in t.actions:
            try:
                prog.action(aname)
            except KeyError:
                raise DanglingReference(f"unknown action '{aname}'", tpath) from None
            action_names.add(aname)
        if t.default_action not in action_names:
            raise DanglingReference(
                f"default action '{t.default_action}' not in table's action list", tpath)
        _check_action_data(prog, t.default_action, t.default_params, tpath)
        for aname, nxt in t.next_tables:
            if aname not in action_names:
                raise DanglingReference(f"next_tables names unknown action '{aname}'", tpath)
            if nxt is not None and nxt not in nodes:
                raise DanglingReference(f"next node '{nxt}' not defined", tpath)
        seen_keys = set()
        for entry in t.const_entries:
            if entry.action not in action_names:
                raise DanglingReference(
                    f"entry action '{entry.action}' not in table's action list", tpath)
            if len(entry.key) != len(t.key):
                raise MalformedDocument(
                    f"entry key arity {len(entry.key)} != {len(t.key)}", tpath)
            for v, w in zip(entry.key, widths):
                if v >= (1 << w):
                    raise WidthOutOfRange(f"entry key value {v} exceeds width {w}", tpath)
            if entry.key in seen_keys:
                raise MalformedDocument(f"duplicate entry key {entry.key}", tpath)
            seen_keys.add(entry.key)
            _check_action_data(prog, entry.action, entry.params, tpath)

    for c in pipe.conditionals:
        _validate_expr(c.expression, prog, 0, f"{path}/{c.name}")
        for nxt in (c.true_next, c.false_next):
            if nxt is not None and nxt not in nodes:
                raise DanglingReference(f"next node '{nxt}' not defined", f"{path}/{c.name}")

    _check_acyclic(pipe, nodes, path)


def _check_action_data(prog: PipelineProgram, action_name: str, params: tuple[int, ...],
                       path: str):
    action = prog.action(action_name)
    if len(params) != len(action.params):
        raise MalformedDocument(
            f"action '{action_name}' takes {len(action.params)} params, got {len(params)}", path)
    for v, (pname, w) in zip(params, action.params):
        if v >= (1 << w):
            raise WidthOutOfRange(f"param '{pname}' value {v} exceeds width {w}", path)


def _successors(node) -> list[str]:
    if isinstance(node, TableDef):
        return [nxt for _, nxt in node.next_tables if nxt is not None]
    return [n for n in (node.true_next, node.false_next) if n is not None]


def _check_acyclic(pipe: PipelineDef, nodes: dict, path: str):
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in nodes}

    def visit(name: str):
        color[name] = GREY
        for nxt in _successors(nodes[name]):
            if color[nxt] == GREY:
                raise UnsupportedConstruct("cyclic control flow", f"{path}/{nxt}")
            if color[nxt] == WHITE:
                visit(nxt)
        color[name] = BLACK

    if pipe.init_node is not None:
        visit(pipe.init_node)


def _validate_target_metadata(prog: PipelineProgram):
    for mname, mfields in REQUIRED_METADATA[prog.target].items():
        try:
            inst = prog.header(mname)
        except KeyError:
            raise MalformedDocument(
                f"target '{prog.target}' requires metadata instance '{mname}'",
                "/headers") from None
        if not inst.metadata:
            raise MalformedDocument(f"'{mname}' must be a metadata instance", "/headers")
        ht = prog.header_type(inst.header_type)
        for fname, width in mfields:
            try:
                actual = ht.field_width(fname)
            except KeyError:
                raise MalformedDocument(
                    f"metadata '{mname}' missing field '{fname}'", "/headers") from None
            if actual != width:
                raise WidthOutOfRange(
                    f"metadata field '{mname}.{fname}' must be {width} bits, got {actual}",
                    "/headers")
    if prog.target != "v1quantum":
        return
    for action in prog.actions:
        consts = _assigned_const_fields(action)
        for dest in consts:
            if dest == ("xconnect_metadata", "bsm_info"):
                raise MalformedDocument(
                    f"action '{action.name}' writes xconnect_metadata.bsm_info "
                    "(populated by replication only)", f"/actions/{action.name}")
        eg = consts.get(("xconnect_metadata", "egress_spec"), 0)
        grp = consts.get(("xconnect_metadata", "bsm_grp"), 0)
        if eg and grp:
            raise MalformedDocument(
                f"action '{action.name}' selects both egress_spec and bsm_grp",
                f"/actions/{action.name}")
        for prim in action.primitives:
            if prim.op == "assign" and not isinstance(prim.args[1], Const):
                dest = prim.args[0]
                if (dest.header, dest.field) == ("xconnect_metadata", "bsm_info"):
                    raise MalformedDocument(
                        f"action '{action.name}' writes xconnect_metadata.bsm_info "
                        "(populated by replication only)", f"/actions/{action.name}")


# --------------------------------------------------------------------------
# IR -> document

def serialize_document(prog: PipelineProgram) -> dict:
    """Render the normalized document form (sorted arrays, dense ids)."""
    doc: dict = {"target": prog.target}
    doc["header_types"] = [
        {"name": ht.name, "id": i, "fields": [[f, w] for f, w in ht.fields]}
        for i, ht in enumerate(prog.header_types)]
    doc["headers"] = [
        {"name": h.name, "id": i, "header_type": h.header_type, "metadata": h.metadata}
        for i, h in enumerate(prog.headers)]
    doc["enums"] = [
        {"name": e.name, "entries": [[m, v] for m, v in e.members]} for e in prog.enums]
    doc["parsers"] = [
        {"name": p.name, "id": i, "init_state": p.start,
         "parse_states": [
             {"name": s.name, "id": j,
              "parser_ops": [
                  {"op": "extract",
                   "parameters": [{"type": "regular", "value": h}]} for h in s.extracts],
              "transition_key": [
                  {"type": "field", "value": [r.header, r.field]} for r in s.key],
              "transitions": [
                  {"type": "default" if t.value is None else "hexstr",
                   "value": None if t.value is None else hex(t.value),
                   "mask": None,
                   "next_state": t.next_state} for t in s.transitions]}
             for j, s in enumerate(p.states)]}
        for i, p in enumerate(prog.parsers)]
    doc["deparsers"] = [
        {"name": d.name, "id": i, "order": list(d.order)} for i, d in enumerate(prog.deparsers)]
    doc["actions"] = [
        {"name": a.name, "id": i,
         "runtime_data": [{"name": n, "bitwidth": w} for n, w in a.params],
         "primitives": [_serialize_primitive(p) for p in a.primitives]}
        for i, a in enumerate(prog.actions)]
    doc["pipelines"] = [
        {"name": p.name, "id": i, "init_table": p.init_node,
         "tables": [
             {"name": t.name, "id": j, "match_type": "exact",
              "key": [{"match_type": "exact", "target": [r.header, r.field]} for r in t.key],
              "actions": list(t.actions),
              "next_tables": {a: n for a, n in t.next_tables},
              "default_entry": {"action_name": t.default_action,
                                "action_data": [hex(v) for v in t.default_params]},
              "entries": [
                  {"key": [hex(v) for v in e.key], "action_name": e.action,
                   "action_data": [hex(v) for v in e.params]} for e in t.const_entries]}
             for j, t in enumerate(p.tables)],
         "conditionals": [
             {"name": c.name, "id": j, "expression": _serialize_expr(c.expression),
              "true_next": c.true_next, "false_next": c.false_next}
             for j, c in enumerate(p.conditionals)]}
        for i, p in enumerate(prog.pipelines)]
    doc["register_arrays"] = [
        {"name": r.name, "id": i, "bitwidth": r.width, "size": r.size}
        for i, r in enumerate(prog.register_arrays)]
    return doc


def _serialize_primitive(prim: Primitive) -> dict:
    if prim.op == "assign":
        params = [_serialize_expr(prim.args[0]), _serialize_expr(prim.args[1])]
    elif prim.op == "register_read":
        params = [_serialize_expr(prim.args[0]),
                  {"type": "register_array", "value": prim.args[1]},
                  _serialize_expr(prim.args[2])]
    elif prim.op == "register_write":
        params = [{"type": "register_array", "value": prim.args[0]},
                  _serialize_expr(prim.args[1]), _serialize_expr(prim.args[2])]
    else:
        params = [{"type": "header", "value": prim.args[0]}]
    return {"op": prim.op, "parameters": params}


def serialize_program(prog: PipelineProgram) -> str:
    """Serialize to the document text form; load_program round-trips it exactly."""
    return json.dumps(serialize_document(prog), indent=2) + "\n"
