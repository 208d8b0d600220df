"""Exception hierarchy shared by every layer of the package."""


class LmuError(Exception):
    """Base class for all errors raised by lmu."""


class ParseError(LmuError):
    """Malformed input text. Carries a 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ValidationError(LmuError):
    """Well-formed input that violates a semantic invariant."""


class InvariantViolation(LmuError):
    """An internal invariant failed. Always indicates a bug."""
