"""Errors raised while loading or validating pipeline program documents."""


class ProgramValidationError(Exception):
    """Base class for every program load/validation failure.

    ``path`` is a JSON-pointer-style location of the offending construct.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{message} (at {path})" if path else message)


class MalformedDocument(ProgramValidationError):
    """The document is not well-formed JSON or not an object."""


class UnsupportedConstruct(ProgramValidationError):
    """The document uses a construct outside the supported subset."""

    def __init__(self, construct: str, path: str = ""):
        self.construct = construct
        super().__init__(f"unsupported construct: {construct}", path)


class DanglingReference(ProgramValidationError):
    """A name refers to a header, field, action, state, or table that does not exist."""


class WidthOutOfRange(ProgramValidationError):
    """A declared bit-width is outside [1, 64]."""


class UnreachableState(ProgramValidationError):
    """A parser state cannot be reached from the start state."""
