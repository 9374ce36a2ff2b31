"""Program execution: parser, pipelines, deparser, expressions, tables, registers."""

from .errors import (
    EvaluationError,
    IndexOutOfRange,
    KeyArityMismatch,
    ParamMismatch,
    ParseError,
    RuntimeExecutionError,
    TableError,
    UnknownAction,
    UnknownTable,
)
from .packet import PacketInstance
from .processor import CompiledProgram, ProcessorState, compile_expr

__all__ = [
    "CompiledProgram",
    "EvaluationError",
    "IndexOutOfRange",
    "KeyArityMismatch",
    "PacketInstance",
    "ParamMismatch",
    "ParseError",
    "ProcessorState",
    "RuntimeExecutionError",
    "TableError",
    "UnknownAction",
    "UnknownTable",
    "compile_expr",
]
