"""Exception hierarchy shared by all slotmax modules.

The CLI maps these onto exit codes: ValidationError (and subclasses) exits
with 1, InternalInvariantError with 2.
"""


class SlotmaxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SlotmaxError, ValueError):
    """Invalid input: bad arguments, malformed data, violated preconditions."""


class ParseError(ValidationError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InternalInvariantError(SlotmaxError, RuntimeError):
    """A consistency check inside the library failed; indicates a bug."""
