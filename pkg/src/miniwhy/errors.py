"""Exception types shared across the pipeline."""

from __future__ import annotations


class MiniWhyError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MiniWhyError):
    """Syntax error with position and the tokens that would have been accepted."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"{line}:{col}"
        if expected:
            message = f"{message} (expected one of: {', '.join(expected)})"
        super().__init__(f"{loc}: {message}")


class TypeCheckFailure(MiniWhyError):
    """Raised by typecheck() when a unit has type errors; carries all of them."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class ExecutionFault(MiniWhyError):
    """Runtime error during interpretation (division by zero, bounds, overflow...)."""

    def __init__(self, reason: str, line: int | None = None):
        self.reason = reason
        self.line = line
        where = f" at line {line}" if line is not None else ""
        super().__init__(f"{reason}{where}")


class ContractViolation(MiniWhyError):
    """A requires/ensures/invariant/variant/assert check evaluated to false."""

    def __init__(self, kind: str, method: str, line: int | None, witness: dict):
        self.kind = kind
        self.method = method
        self.line = line
        self.witness = witness
        where = f" at line {line}" if line is not None else ""
        super().__init__(f"{kind} violated in {method}{where}")


class EvalError(MiniWhyError):
    """A formula cannot be evaluated (unbounded quantifier, missing label...)."""


class VcgenError(MiniWhyError):
    """Obligation generation cannot proceed (missing invariant, recursion...)."""


class ExportError(MiniWhyError):
    """An obligation cannot be rendered in the requested format."""
