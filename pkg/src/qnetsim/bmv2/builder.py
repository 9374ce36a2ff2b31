"""Imperative construction API for pipeline programs.

Builds the same validated ``PipelineProgram`` the loader produces, so a
program can be authored in Python without an external compiler and shipped
as a document that round-trips bit-for-bit. Validation errors surface at
``build()`` time with the loader's error types.

The expression helpers (``F``, ``C``, ``ADD``, ...) construct IR expression
nodes directly; ``ACCEPT`` marks a parser transition to the accept terminal.
"""

from __future__ import annotations

from .ir import (
    ActionDef,
    BinOp,
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
    RuntimeRef,
    RegisterRef,
    TableConstEntry,
    TableDef,
    TernaryOp,
    UnaryOp,
    ValidRef,
)
from .loader import validate_program

ACCEPT = None


# Expression helpers -------------------------------------------------------

def F(header: str, field: str) -> FieldRef:
    return FieldRef(header, field)


def C(value: int) -> Const:
    return Const(value)


def RT(index: int) -> RuntimeRef:
    return RuntimeRef(index)


def REG(array: str, index: Expr) -> RegisterRef:
    return RegisterRef(array, index)


def VALID(header: str) -> ValidRef:
    return ValidRef(header)


def _bin(op):
    def make(left: Expr, right: Expr) -> BinOp:
        return BinOp(op, left, right)
    return make


ADD = _bin("+")
SUB = _bin("-")
MUL = _bin("*")
BAND = _bin("&")
BOR = _bin("|")
XOR = _bin("^")
SHL = _bin("<<")
SHR = _bin(">>")
EQ = _bin("==")
NE = _bin("!=")
LT = _bin("<")
LE = _bin("<=")
GT = _bin(">")
GE = _bin(">=")
AND = _bin("and")
OR = _bin("or")


def NOT(operand: Expr) -> UnaryOp:
    return UnaryOp("not", operand)


def INV(operand: Expr) -> UnaryOp:
    return UnaryOp("~", operand)


def TERN(cond: Expr, if_true: Expr, if_false: Expr) -> TernaryOp:
    return TernaryOp(cond, if_true, if_false)


# Builder ------------------------------------------------------------------

class ActionBuilder:
    def __init__(self, name: str, params: list[tuple[str, int]]):
        self.name = name
        self.params = tuple(params)
        self._prims: list[Primitive] = []

    def assign(self, dest: tuple[str, str] | FieldRef, src: Expr) -> "ActionBuilder":
        if isinstance(dest, tuple):
            dest = FieldRef(*dest)
        self._prims.append(Primitive("assign", (dest, src)))
        return self

    def reg_read(self, dest: tuple[str, str] | FieldRef, array: str, index: Expr):
        if isinstance(dest, tuple):
            dest = FieldRef(*dest)
        self._prims.append(Primitive("register_read", (dest, array, index)))
        return self

    def reg_write(self, array: str, index: Expr, value: Expr) -> "ActionBuilder":
        self._prims.append(Primitive("register_write", (array, index, value)))
        return self

    def add_header(self, header: str) -> "ActionBuilder":
        self._prims.append(Primitive("add_header", (header,)))
        return self

    def remove_header(self, header: str) -> "ActionBuilder":
        self._prims.append(Primitive("remove_header", (header,)))
        return self

    def _build(self) -> ActionDef:
        return ActionDef(self.name, self.params, tuple(self._prims))


class ParserBuilder:
    def __init__(self, name: str, start: str):
        self.name = name
        self.start = start
        self._states: list[ParserState] = []

    def state(self, name: str, extracts: list[str] = (),
              key: list[tuple[str, str]] = (),
              transitions: dict[int | None, str | None] | None = None) -> "ParserBuilder":
        """Add a state; ``transitions`` maps key value (None = default) to next
        state name (None = accept). A state with no transitions accepts."""
        trans = []
        for value, nxt in (transitions or {}).items():
            trans.append(ParserTransition(value, nxt))
        trans.sort(key=lambda t: (t.value is None, t.value if t.value is not None else 0))
        self._states.append(ParserState(
            name, tuple(extracts), tuple(FieldRef(*k) for k in key), tuple(trans)))
        return self

    def _build(self) -> ParserDef:
        return ParserDef(self.name, self.start,
                         tuple(sorted(self._states, key=lambda s: s.name)))


class TableBuilder:
    def __init__(self, name: str, key: list[tuple[str, str]], actions: list[str],
                 default: str | tuple[str, tuple[int, ...]],
                 next_tables: dict[str, str | None] | None):
        self.name = name
        self.key = tuple(FieldRef(*k) for k in key)
        self.actions = tuple(actions)
        if isinstance(default, str):
            self.default_action, self.default_params = default, ()
        else:
            self.default_action, self.default_params = default[0], tuple(default[1])
        self.next_tables = dict(next_tables or {})
        self._entries: list[TableConstEntry] = []

    def const_entry(self, key: list[int], action: str, params: list[int] = ()) -> "TableBuilder":
        self._entries.append(TableConstEntry(tuple(key), action, tuple(params)))
        return self

    def _build(self) -> TableDef:
        return TableDef(
            self.name, self.key, self.actions, self.default_action, self.default_params,
            tuple(sorted(self.next_tables.items())),
            tuple(sorted(self._entries, key=lambda e: e.key)))


class PipelineBuilder:
    def __init__(self, name: str, init: str | None):
        self.name = name
        self.init = init
        self._tables: list[TableBuilder] = []
        self._conds: list[ConditionalDef] = []

    def table(self, name: str, key: list[tuple[str, str]] = (), actions: list[str] = (),
              default: str | tuple[str, tuple[int, ...]] = "",
              next_tables: dict[str, str | None] | None = None) -> TableBuilder:
        tb = TableBuilder(name, key, actions, default, next_tables)
        self._tables.append(tb)
        return tb

    def conditional(self, name: str, expression: Expr,
                    true_next: str | None, false_next: str | None) -> "PipelineBuilder":
        self._conds.append(ConditionalDef(name, expression, true_next, false_next))
        return self

    def _build(self) -> PipelineDef:
        return PipelineDef(
            self.name, self.init,
            tuple(sorted((t._build() for t in self._tables), key=lambda t: t.name)),
            tuple(sorted(self._conds, key=lambda c: c.name)))


class ProgramBuilder:
    """Accumulates declarations and produces a validated PipelineProgram."""

    def __init__(self, target: str = "v1quantum"):
        self.target = target
        self._header_types: list[HeaderTypeDef] = []
        self._headers: list[HeaderInstance] = []
        self._enums: list[EnumDef] = []
        self._parsers: list[ParserBuilder] = []
        self._deparsers: list[DeparserDef] = []
        self._actions: list[ActionBuilder] = []
        self._pipelines: list[PipelineBuilder] = []
        self._registers: list[RegisterArrayDef] = []

    def header_type(self, name: str, fields: list[tuple[str, int]]) -> "ProgramBuilder":
        self._header_types.append(HeaderTypeDef(name, tuple(fields)))
        return self

    def declare_target_metadata(self) -> "ProgramBuilder":
        """Declare the metadata instances the target requires, bit-exact."""
        from .loader import REQUIRED_METADATA

        for mname, mfields in REQUIRED_METADATA[self.target].items():
            self.header_type(f"{mname}_t", list(mfields))
            self.metadata(mname, f"{mname}_t")
        return self

    def header(self, name: str, header_type: str) -> "ProgramBuilder":
        self._headers.append(HeaderInstance(name, header_type, metadata=False))
        return self

    def metadata(self, name: str, header_type: str) -> "ProgramBuilder":
        self._headers.append(HeaderInstance(name, header_type, metadata=True))
        return self

    def enum(self, name: str, members: dict[str, int]) -> "ProgramBuilder":
        self._enums.append(EnumDef(name, tuple(sorted(members.items()))))
        return self

    def register(self, name: str, width: int, size: int) -> "ProgramBuilder":
        self._registers.append(RegisterArrayDef(name, width, size))
        return self

    def parser(self, name: str = "parser", start: str = "start") -> ParserBuilder:
        pb = ParserBuilder(name, start)
        self._parsers.append(pb)
        return pb

    def deparser(self, name: str = "deparser", order: list[str] = ()) -> "ProgramBuilder":
        self._deparsers.append(DeparserDef(name, tuple(order)))
        return self

    def action(self, name: str, params: list[tuple[str, int]] = ()) -> ActionBuilder:
        ab = ActionBuilder(name, list(params))
        self._actions.append(ab)
        return ab

    def pipeline(self, name: str, init: str | None = None) -> PipelineBuilder:
        pb = PipelineBuilder(name, init)
        self._pipelines.append(pb)
        return pb

    def build(self) -> PipelineProgram:
        """Finalize; raises the loader's validation errors on any invariant breach."""
        prog = PipelineProgram(
            target=self.target,
            header_types=tuple(sorted(self._header_types, key=lambda h: h.name)),
            headers=tuple(sorted(self._headers, key=lambda h: h.name)),
            enums=tuple(sorted(self._enums, key=lambda e: e.name)),
            parsers=tuple(sorted((p._build() for p in self._parsers), key=lambda p: p.name)),
            deparsers=tuple(sorted(self._deparsers, key=lambda d: d.name)),
            actions=tuple(sorted((a._build() for a in self._actions), key=lambda a: a.name)),
            pipelines=tuple(sorted((p._build() for p in self._pipelines), key=lambda p: p.name)),
            register_arrays=tuple(sorted(self._registers, key=lambda r: r.name)),
        )
        validate_program(prog)
        return prog
