"""Errors raised while executing programs or managing processor state."""


class RuntimeExecutionError(Exception):
    """Base class for execution-time failures."""


class ParseError(RuntimeExecutionError):
    """Packet could not be parsed: short extract or unmatched transition."""

    def __init__(self, state: str, reason: str):
        self.state = state
        self.reason = reason
        super().__init__(f"parse error in state '{state}': {reason}")


class EvaluationError(RuntimeExecutionError):
    """Expression evaluation failed (e.g. reading a field of an invalid header)."""


class TableError(RuntimeExecutionError):
    """Base class for table-management failures."""


class UnknownTable(TableError):
    pass


class UnknownAction(TableError):
    pass


class KeyArityMismatch(TableError):
    pass


class ParamMismatch(TableError):
    """Action parameter arity or width does not match the action definition."""


class IndexOutOfRange(RuntimeExecutionError):
    """Register access beyond the declared array size."""
