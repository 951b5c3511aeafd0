"""Exception types shared across the package.

The split mirrors the CLI exit-code contract: usage problems exit 1,
data problems exit 2, numeric failures exit 3.
"""


class ActivePoolError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(ActivePoolError):
    """Invalid invocation: bad flag combinations, unknown strategies, bad config keys."""


class DataFormatError(ActivePoolError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(ActivePoolError):
    """Non-finite values or a numeric routine that cannot proceed."""
