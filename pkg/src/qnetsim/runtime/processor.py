"""Execution engine for pipeline programs.

Programs are compiled once into closure trees (expressions, actions, parser
states, pipeline nodes); a ``ProcessorState`` holds the mutable side — table
entries and register arrays — and drives packets through the compiled blocks.

Semantics pinned here:
- Arithmetic is evaluated over unbounded integers and reduced modulo 2^width
  of the destination at assignment (including register writes).
- Reading a field of an invalid header raises EvaluationError (fail fast);
  metadata instances are always valid.
- Serialization is big-endian, fields packed MSB-first with no padding;
  parse and deparse require byte-aligned totals.
- Exact-match tables only; duplicate-key insert replaces; miss runs the
  default action.
"""

from __future__ import annotations

from ..bmv2.ir import (
    ActionDef,
    BinOp,
    BoolConst,
    ConditionalDef,
    Const,
    FieldRef,
    PipelineProgram,
    RegisterRef,
    RuntimeRef,
    TableDef,
    TernaryOp,
    UnaryOp,
    ValidRef,
)
from .errors import (
    EvaluationError,
    IndexOutOfRange,
    KeyArityMismatch,
    ParamMismatch,
    ParseError,
    UnknownAction,
    UnknownTable,
)
from .packet import PacketInstance

_MAX_SHIFT = 1024


# --------------------------------------------------------------------------
# Expression compilation: closures with signature fn(pkt, rt, regs)

def _compile_field_read(prog: PipelineProgram, ref: FieldRef):
    header, field = ref.header, ref.field
    if prog.header(header).metadata:
        def read_meta(pkt, rt, regs):
            return pkt.headers[header].fields[field]
        return read_meta

    def read(pkt, rt, regs):
        slot = pkt.headers[header]
        if not slot.valid:
            raise EvaluationError(f"read of field '{header}.{field}' on invalid header")
        return slot.fields[field]
    return read


def _need_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EvaluationError(f"{what} requires an integer operand, got {value!r}")
    return value


def _need_bool(value, what: str) -> bool:
    if not isinstance(value, bool):
        raise EvaluationError(f"{what} requires a boolean operand, got {value!r}")
    return value


def compile_expr(prog: PipelineProgram, expr):
    """Compile an expression to fn(pkt, rt, regs) -> int | bool."""
    if isinstance(expr, Const):
        v = expr.value
        return lambda pkt, rt, regs: v
    if isinstance(expr, BoolConst):
        v = expr.value
        return lambda pkt, rt, regs: v
    if isinstance(expr, FieldRef):
        return _compile_field_read(prog, expr)
    if isinstance(expr, RuntimeRef):
        i = expr.index
        return lambda pkt, rt, regs: rt[i]
    if isinstance(expr, RegisterRef):
        array = expr.array
        size = prog.register_array(expr.array).size
        index_fn = compile_expr(prog, expr.index)

        def read_reg(pkt, rt, regs):
            idx = _need_int(index_fn(pkt, rt, regs), "register index")
            if not 0 <= idx < size:
                raise IndexOutOfRange(f"{array}[{idx}] (size {size})")
            return regs[array][idx]
        return read_reg
    if isinstance(expr, ValidRef):
        header = expr.header
        return lambda pkt, rt, regs: pkt.headers[header].valid
    if isinstance(expr, UnaryOp):
        operand = compile_expr(prog, expr.operand)
        if expr.op == "~":
            return lambda pkt, rt, regs: ~_need_int(operand(pkt, rt, regs), "'~'")
        return lambda pkt, rt, regs: not _need_bool(operand(pkt, rt, regs), "'not'")
    if isinstance(expr, TernaryOp):
        cond = compile_expr(prog, expr.cond)
        if_true = compile_expr(prog, expr.if_true)
        if_false = compile_expr(prog, expr.if_false)

        def ternary(pkt, rt, regs):
            if _need_bool(cond(pkt, rt, regs), "ternary condition"):
                return if_true(pkt, rt, regs)
            return if_false(pkt, rt, regs)
        return ternary
    if isinstance(expr, BinOp):
        return _compile_binop(prog, expr)
    raise EvaluationError(f"cannot compile {expr!r}")


def _compile_binop(prog: PipelineProgram, expr: BinOp):
    op = expr.op
    left = compile_expr(prog, expr.left)
    right = compile_expr(prog, expr.right)

    if op in ("and", "or"):
        if op == "and":
            def and_fn(pkt, rt, regs):
                return (_need_bool(left(pkt, rt, regs), "'and'")
                        and _need_bool(right(pkt, rt, regs), "'and'"))
            return and_fn

        def or_fn(pkt, rt, regs):
            return (_need_bool(left(pkt, rt, regs), "'or'")
                    or _need_bool(right(pkt, rt, regs), "'or'"))
        return or_fn

    if op in ("==", "!="):
        if op == "==":
            def eq_fn(pkt, rt, regs):
                return left(pkt, rt, regs) == right(pkt, rt, regs)
            return eq_fn

        def ne_fn(pkt, rt, regs):
            return left(pkt, rt, regs) != right(pkt, rt, regs)
        return ne_fn

    if op in ("<", "<=", ">", ">="):
        import operator
        cmp = {"<": operator.lt, "<=": operator.le,
               ">": operator.gt, ">=": operator.ge}[op]

        def cmp_fn(pkt, rt, regs):
            return cmp(_need_int(left(pkt, rt, regs), f"'{op}'"),
                       _need_int(right(pkt, rt, regs), f"'{op}'"))
        return cmp_fn

    if op in ("<<", ">>"):
        shl = op == "<<"

        def shift_fn(pkt, rt, regs):
            a = _need_int(left(pkt, rt, regs), f"'{op}'")
            n = _need_int(right(pkt, rt, regs), f"'{op}'")
            if n > _MAX_SHIFT:
                raise EvaluationError(f"shift amount {n} too large")
            return a << n if shl else a >> n
        return shift_fn

    import operator
    fn = {"&": operator.and_, "|": operator.or_, "^": operator.xor,
          "+": operator.add, "-": operator.sub, "*": operator.mul}[op]

    def arith_fn(pkt, rt, regs):
        return fn(_need_int(left(pkt, rt, regs), f"'{op}'"),
                  _need_int(right(pkt, rt, regs), f"'{op}'"))
    return arith_fn


# --------------------------------------------------------------------------
# Action compilation

def _as_unsigned(value, width: int) -> int:
    if isinstance(value, bool):
        value = int(value)
    return value & ((1 << width) - 1)


def compile_action(prog: PipelineProgram, action: ActionDef):
    """Compile an action body to fn(pkt, rt, regs)."""
    steps = []
    for prim in action.primitives:
        if prim.op == "assign":
            dest, src = prim.args
            width = prog.field_width(dest.header, dest.field)
            src_fn = compile_expr(prog, src)
            header, field = dest.header, dest.field

            def assign(pkt, rt, regs, header=header, field=field, width=width, src_fn=src_fn):
                slot = pkt.headers[header]
                if not slot.valid:
                    raise EvaluationError(
                        f"write to field '{header}.{field}' on invalid header")
                slot.fields[field] = _as_unsigned(src_fn(pkt, rt, regs), width)
            steps.append(assign)
        elif prim.op == "register_read":
            dest, array, index = prim.args
            width = prog.field_width(dest.header, dest.field)
            size = prog.register_array(array).size
            index_fn = compile_expr(prog, index)
            header, field = dest.header, dest.field

            def reg_read(pkt, rt, regs, header=header, field=field, width=width,
                         array=array, size=size, index_fn=index_fn):
                idx = _need_int(index_fn(pkt, rt, regs), "register index")
                if not 0 <= idx < size:
                    raise IndexOutOfRange(f"{array}[{idx}] (size {size})")
                slot = pkt.headers[header]
                if not slot.valid:
                    raise EvaluationError(
                        f"write to field '{header}.{field}' on invalid header")
                slot.fields[field] = _as_unsigned(regs[array][idx], width)
            steps.append(reg_read)
        elif prim.op == "register_write":
            array, index, value = prim.args
            reg = prog.register_array(array)
            size, width = reg.size, reg.width
            index_fn = compile_expr(prog, index)
            value_fn = compile_expr(prog, value)

            def reg_write(pkt, rt, regs, array=array, size=size, width=width,
                          index_fn=index_fn, value_fn=value_fn):
                idx = _need_int(index_fn(pkt, rt, regs), "register index")
                if not 0 <= idx < size:
                    raise IndexOutOfRange(f"{array}[{idx}] (size {size})")
                regs[array][idx] = _as_unsigned(value_fn(pkt, rt, regs), width)
            steps.append(reg_write)
        elif prim.op == "add_header":
            header = prim.args[0]

            def add_header(pkt, rt, regs, header=header):
                slot = pkt.headers[header]
                if not slot.valid:
                    slot.valid = True
                    for f in slot.fields:
                        slot.fields[f] = 0
            steps.append(add_header)
        else:  # remove_header
            header = prim.args[0]

            def remove_header(pkt, rt, regs, header=header):
                pkt.headers[header].valid = False
            steps.append(remove_header)

    steps = tuple(steps)

    def run(pkt, rt, regs):
        for step in steps:
            step(pkt, rt, regs)
    return run


# --------------------------------------------------------------------------
# Compiled program

class _CompiledParserState:
    __slots__ = ("name", "extracts", "key_fns", "key_widths", "transitions",
                 "default", "has_transitions")

    def __init__(self, name, extracts, key_fns, key_widths, transitions,
                 default, has_transitions):
        self.name = name
        self.extracts = extracts  # tuple of (header, width, ((field, width), ...))
        self.key_fns = key_fns
        self.key_widths = key_widths
        self.transitions = transitions  # value -> next state or None (accept)
        self.default = default  # (next state or None, present flag)
        self.has_transitions = has_transitions


class _CompiledTable:
    __slots__ = ("name", "key_fns", "key_widths", "default", "actions", "next_map",
                 "definition")

    def __init__(self, name, key_fns, key_widths, default, actions, next_map, definition):
        self.name = name
        self.key_fns = key_fns
        self.key_widths = key_widths
        self.default = default  # (action_fn, params, next_node)
        self.actions = actions  # name -> compiled fn
        self.next_map = next_map  # name -> next node
        self.definition = definition


class CompiledProgram:
    """Immutable compiled form shared by every processor running the program."""

    def __init__(self, prog: PipelineProgram):
        self.program = prog
        self.action_fns = {a.name: compile_action(prog, a) for a in prog.actions}
        self.action_defs = {a.name: a for a in prog.actions}
        self.parsers = {p.name: self._compile_parser(prog, p) for p in prog.parsers}
        self.deparsers = {d.name: self._compile_deparser(prog, d) for d in prog.deparsers}
        self.pipelines = {}
        self.tables: dict[str, _CompiledTable] = {}
        for pipe in prog.pipelines:
            nodes = {}
            for t in pipe.tables:
                ct = self._compile_table(prog, t)
                nodes[t.name] = ct
                self.tables[t.name] = ct
            for c in pipe.conditionals:
                nodes[c.name] = self._compile_conditional(prog, c)
            self.pipelines[pipe.name] = (pipe.init_node, nodes)
        self.metadata_headers = tuple(h.name for h in prog.headers if h.metadata)
        self.packet_template = PacketInstance(prog)

    def _compile_parser(self, prog, parser):
        states = {}
        for s in parser.states:
            extracts = []
            for hname in s.extracts:
                ht = prog.header_type(prog.header(hname).header_type)
                extracts.append((hname, ht.total_width(), tuple(ht.fields)))
            key_fns = tuple(_compile_field_read(prog, ref) for ref in s.key)
            key_widths = tuple(prog.field_width(r.header, r.field) for r in s.key)
            transitions = {}
            default = (None, False)
            for t in s.transitions:
                if t.value is None:
                    default = (t.next_state, True)
                else:
                    transitions[t.value] = t.next_state
            states[s.name] = _CompiledParserState(
                s.name, tuple(extracts), key_fns, key_widths, transitions, default,
                bool(s.transitions))
        return (parser.start, states)

    def _compile_deparser(self, prog, dep):
        emits = []
        for hname in dep.order:
            ht = prog.header_type(prog.header(hname).header_type)
            emits.append((hname, ht.total_width(), tuple(ht.fields)))
        return tuple(emits)

    def _compile_table(self, prog, t: TableDef):
        key_fns = tuple(_compile_field_read(prog, ref) for ref in t.key)
        key_widths = tuple(prog.field_width(r.header, r.field) for r in t.key)
        next_map = {a: t.next_for(a) for a in t.actions}
        default = (self.action_fns[t.default_action], t.default_params,
                   next_map[t.default_action])
        return _CompiledTable(t.name, key_fns, key_widths, default,
                              {a: self.action_fns[a] for a in t.actions}, next_map, t)

    def _compile_conditional(self, prog, c: ConditionalDef):
        expr_fn = compile_expr(prog, c.expression)
        return (c.name, expr_fn, c.true_next, c.false_next)


_COMPILE_CACHE: dict[int, CompiledProgram] = {}


def compiled(prog: PipelineProgram) -> CompiledProgram:
    cp = _COMPILE_CACHE.get(id(prog))
    if cp is None or cp.program is not prog:
        cp = CompiledProgram(prog)
        _COMPILE_CACHE[id(prog)] = cp
    return cp


# --------------------------------------------------------------------------
# Processor state

class ProcessorState:
    """Mutable per-device execution state: table entries and register arrays."""

    def __init__(self, program: PipelineProgram):
        self.program = program
        self.compiled = compiled(program)
        self.registers: dict[str, list[int]] = {
            r.name: [0] * r.size for r in program.register_arrays}
        # table name -> key tuple -> (action_fn, params, next_node, action_name)
        self.entries: dict[str, dict[tuple[int, ...], tuple]] = {
            t.name: {} for t in self.compiled.tables.values()}
        for ct in self.compiled.tables.values():
            for entry in ct.definition.const_entries:
                self.entries[ct.name][entry.key] = (
                    ct.actions[entry.action], entry.params,
                    ct.next_map[entry.action], entry.action)

    def new_packet(self, payload: bytes = b"") -> PacketInstance:
        return PacketInstance.from_template(self.compiled.packet_template, payload)

    # -- parser / deparser -------------------------------------------------

    def parse(self, raw: bytes, parser: str = "parser") -> PacketInstance:
        """Extract headers per the parser state machine; leftovers become payload."""
        start, states = self.compiled.parsers[parser]
        pkt = PacketInstance.from_template(self.compiled.packet_template)
        buf = int.from_bytes(raw, "big")
        total_bits = len(raw) * 8
        offset = 0
        state_name = start
        while state_name is not None:
            state = states[state_name]
            for hname, width, fields in state.extracts:
                if offset + width > total_bits:
                    raise ParseError(state_name,
                                     f"packet too short for header '{hname}'")
                chunk = (buf >> (total_bits - offset - width)) & ((1 << width) - 1)
                slot = pkt.headers[hname]
                slot.valid = True
                pos = width
                for fname, fwidth in fields:
                    pos -= fwidth
                    slot.fields[fname] = (chunk >> pos) & ((1 << fwidth) - 1)
                offset += width
            if not state.has_transitions:
                break
            value = self._parser_key_value(state, pkt)
            if value is not None and value in state.transitions:
                state_name = state.transitions[value]
            elif state.default[1]:
                state_name = state.default[0]
            else:
                raise ParseError(state_name, f"no transition for key value {value}")
        if offset % 8:
            raise ParseError(state_name or "accept", "unaligned payload")
        pkt.payload = raw[offset // 8:]
        return pkt

    def _parser_key_value(self, state, pkt):
        if not state.key_fns:
            return None
        value = 0
        for fn, width in zip(state.key_fns, state.key_widths):
            value = (value << width) | fn(pkt, (), self.registers)
        return value

    def deparse(self, pkt: PacketInstance, deparser: str = "deparser") -> bytes:
        """Concatenate valid headers in emit order, then the payload."""
        emits = self.compiled.deparsers[deparser]
        acc = 0
        bits = 0
        for hname, width, fields in emits:
            slot = pkt.headers[hname]
            if not slot.valid:
                continue
            for fname, fwidth in fields:
                acc = (acc << fwidth) | (slot.fields[fname] & ((1 << fwidth) - 1))
            bits += width
        if bits % 8:
            raise EvaluationError("deparsed headers are not byte-aligned")
        return acc.to_bytes(bits // 8, "big") + pkt.payload

    # -- pipelines ----------------------------------------------------------

    def execute_pipeline(self, name: str, pkt: PacketInstance) -> PacketInstance:
        """Apply the pipeline's node graph to the packet; mutates pkt in place."""
        init, nodes = self.compiled.pipelines[name]
        regs = self.registers
        entries = self.entries
        cur = init
        while cur is not None:
            node = nodes[cur]
            if isinstance(node, _CompiledTable):
                key = tuple(fn(pkt, (), regs) for fn in node.key_fns)
                hit = entries[node.name].get(key)
                if hit is None:
                    action_fn, params, nxt = node.default
                else:
                    action_fn, params, nxt = hit[0], hit[1], hit[2]
                action_fn(pkt, params, regs)
                cur = nxt
            else:
                _, expr_fn, true_next, false_next = node
                branch = expr_fn(pkt, (), regs)
                if not isinstance(branch, bool):
                    raise EvaluationError(
                        f"conditional '{node[0]}' must evaluate to a boolean")
                cur = true_next if branch else false_next
        return pkt

    # -- expressions (exposed for tests and debugging) -----------------------

    def eval_expression(self, expr, pkt: PacketInstance | None = None,
                        runtime_data: tuple = ()):
        if pkt is None:
            pkt = self.new_packet()
        return compile_expr(self.program, expr)(pkt, runtime_data, self.registers)

    # -- table management ----------------------------------------------------

    def _table(self, table: str) -> _CompiledTable:
        ct = self.compiled.tables.get(table)
        if ct is None:
            raise UnknownTable(table)
        return ct

    def table_insert(self, table: str, key: tuple[int, ...], action: str,
                     params: tuple[int, ...] = ()):
        """Install (or replace) an exact-match entry."""
        ct = self._table(table)
        key = tuple(key)
        params = tuple(params)
        if action not in ct.actions:
            raise UnknownAction(f"action '{action}' not in table '{table}'")
        if len(key) != len(ct.key_widths):
            raise KeyArityMismatch(
                f"table '{table}' takes {len(ct.key_widths)} key fields, got {len(key)}")
        for v, w in zip(key, ct.key_widths):
            if not 0 <= v < (1 << w):
                raise KeyArityMismatch(
                    f"key value {v} does not fit {w} bits in table '{table}'")
        adef = self.compiled.action_defs[action]
        if len(params) != len(adef.params):
            raise ParamMismatch(
                f"action '{action}' takes {len(adef.params)} params, got {len(params)}")
        for v, (pname, w) in zip(params, adef.params):
            if not 0 <= v < (1 << w):
                raise ParamMismatch(
                    f"param '{pname}' value {v} does not fit {w} bits")
        self.entries[table][key] = (ct.actions[action], params,
                                    ct.next_map[action], action)

    def table_delete(self, table: str, key: tuple[int, ...]):
        """Remove an entry; subsequent lookups fall to the default action."""
        ct = self._table(table)
        key = tuple(key)
        if key not in self.entries[table]:
            raise KeyArityMismatch(f"no entry {key} in table '{table}'")
        del self.entries[table][key]

    def table_dump(self, table: str) -> list[tuple[tuple[int, ...], str, tuple[int, ...]]]:
        ct = self._table(table)
        return sorted((key, entry[3], entry[1])
                      for key, entry in self.entries[table].items())

    # -- registers -----------------------------------------------------------

    def register_read(self, array: str, index: int) -> int:
        reg = self.program.register_array(array)
        if not 0 <= index < reg.size:
            raise IndexOutOfRange(f"{array}[{index}] (size {reg.size})")
        return self.registers[array][index]

    def register_write(self, array: str, index: int, value: int):
        reg = self.program.register_array(array)
        if not 0 <= index < reg.size:
            raise IndexOutOfRange(f"{array}[{index}] (size {reg.size})")
        self.registers[array][index] = value & ((1 << reg.width) - 1)
