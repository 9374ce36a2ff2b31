"""Immutable in-memory representation of a validated pipeline program.

All collections that the file format treats as unordered are stored as tuples
sorted by name, so two programs that differ only by array permutation (or by
id assignment) compare equal. Everything is hashable and safe to share across
concurrently running simulations.
"""

from __future__ import annotations

from dataclasses import dataclass, field


TARGET_QUANTUM = "v1quantum"
TARGET_CLASSICAL = "classical"

# Pipelines each target must define, exactly.
REQUIRED_PIPELINES = {
    TARGET_QUANTUM: ("egress", "ingress", "qcontrol"),
    TARGET_CLASSICAL: ("egress", "ingress"),
}

MAX_FIELD_WIDTH = 64


# --------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class FieldRef:
    header: str
    field: str


@dataclass(frozen=True)
class RuntimeRef:
    """Reference to an action's runtime parameter by position."""

    index: int


@dataclass(frozen=True)
class RegisterRef:
    """Read of one register cell; the index is itself an expression."""

    array: str
    index: "Expr"


@dataclass(frozen=True)
class ValidRef:
    """Header validity test; evaluates to a boolean."""

    header: str


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "~" | "not"
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class TernaryOp:
    cond: "Expr"
    if_true: "Expr"
    if_false: "Expr"


Expr = (
    Const
    | BoolConst
    | FieldRef
    | RuntimeRef
    | RegisterRef
    | ValidRef
    | UnaryOp
    | BinOp
    | TernaryOp
)

ARITH_OPS = ("&", "|", "^", "+", "-", "*", "<<", ">>")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGICAL_OPS = ("and", "or")


# --------------------------------------------------------------------------
# Declarations

@dataclass(frozen=True)
class HeaderTypeDef:
    name: str
    fields: tuple[tuple[str, int], ...]  # ordered (name, bit-width)

    def total_width(self) -> int:
        return sum(w for _, w in self.fields)

    def field_width(self, name: str) -> int:
        for f, w in self.fields:
            if f == name:
                return w
        raise KeyError(name)


@dataclass(frozen=True)
class HeaderInstance:
    name: str
    header_type: str
    metadata: bool = False


@dataclass(frozen=True)
class EnumDef:
    name: str
    members: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class ParserTransition:
    value: int | None  # None = default
    next_state: str | None  # None = accept


@dataclass(frozen=True)
class ParserState:
    name: str
    extracts: tuple[str, ...]  # header instance names, in order
    key: tuple[FieldRef, ...]
    transitions: tuple[ParserTransition, ...]


@dataclass(frozen=True)
class ParserDef:
    name: str
    start: str
    states: tuple[ParserState, ...]


@dataclass(frozen=True)
class DeparserDef:
    name: str
    order: tuple[str, ...]  # emit order of header instances


@dataclass(frozen=True)
class Primitive:
    op: str  # assign | register_read | register_write | add_header | remove_header
    args: tuple[object, ...]


@dataclass(frozen=True)
class ActionDef:
    name: str
    params: tuple[tuple[str, int], ...]  # (name, bit-width)
    primitives: tuple[Primitive, ...] = ()


@dataclass(frozen=True)
class TableConstEntry:
    key: tuple[int, ...]
    action: str
    params: tuple[int, ...] = ()


@dataclass(frozen=True)
class TableDef:
    name: str
    key: tuple[FieldRef, ...]
    actions: tuple[str, ...]
    default_action: str
    default_params: tuple[int, ...] = ()
    next_tables: tuple[tuple[str, str | None], ...] = ()  # action -> next node
    const_entries: tuple[TableConstEntry, ...] = ()

    def next_for(self, action: str) -> str | None:
        for name, nxt in self.next_tables:
            if name == action:
                return nxt
        return None


@dataclass(frozen=True)
class ConditionalDef:
    name: str
    expression: Expr
    true_next: str | None
    false_next: str | None


@dataclass(frozen=True)
class PipelineDef:
    name: str
    init_node: str | None
    tables: tuple[TableDef, ...] = ()
    conditionals: tuple[ConditionalDef, ...] = ()


@dataclass(frozen=True)
class RegisterArrayDef:
    name: str
    width: int
    size: int


@dataclass(frozen=True)
class PipelineProgram:
    """Validated program: the unit the runtime executes and the loader round-trips."""

    target: str = TARGET_QUANTUM
    header_types: tuple[HeaderTypeDef, ...] = ()
    headers: tuple[HeaderInstance, ...] = ()
    enums: tuple[EnumDef, ...] = ()
    parsers: tuple[ParserDef, ...] = ()
    deparsers: tuple[DeparserDef, ...] = ()
    actions: tuple[ActionDef, ...] = ()
    pipelines: tuple[PipelineDef, ...] = ()
    register_arrays: tuple[RegisterArrayDef, ...] = field(default=())

    def header_type(self, name: str) -> HeaderTypeDef:
        for ht in self.header_types:
            if ht.name == name:
                return ht
        raise KeyError(name)

    def header(self, name: str) -> HeaderInstance:
        for h in self.headers:
            if h.name == name:
                return h
        raise KeyError(name)

    def field_width(self, header: str, fld: str) -> int:
        return self.header_type(self.header(header).header_type).field_width(fld)

    def action(self, name: str) -> ActionDef:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def pipeline(self, name: str) -> PipelineDef:
        for p in self.pipelines:
            if p.name == name:
                return p
        raise KeyError(name)

    def parser(self, name: str = "parser") -> ParserDef:
        for p in self.parsers:
            if p.name == name:
                return p
        raise KeyError(name)

    def deparser(self, name: str = "deparser") -> DeparserDef:
        for d in self.deparsers:
            if d.name == name:
                return d
        raise KeyError(name)

    def register_array(self, name: str) -> RegisterArrayDef:
        for r in self.register_arrays:
            if r.name == name:
                return r
        raise KeyError(name)
