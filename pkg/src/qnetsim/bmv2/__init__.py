"""Pipeline program file format: loading, validation, building, serialization."""

from .builder import ProgramBuilder
from .errors import (
    DanglingReference,
    MalformedDocument,
    ProgramValidationError,
    UnreachableState,
    UnsupportedConstruct,
    WidthOutOfRange,
)
from .ir import PipelineProgram
from .loader import load_document, load_program, serialize_document, serialize_program, validate_program

__all__ = [
    "DanglingReference",
    "MalformedDocument",
    "PipelineProgram",
    "ProgramBuilder",
    "ProgramValidationError",
    "UnreachableState",
    "UnsupportedConstruct",
    "WidthOutOfRange",
    "load_document",
    "load_program",
    "serialize_document",
    "serialize_program",
    "validate_program",
]
