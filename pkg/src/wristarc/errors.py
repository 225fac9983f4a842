"""Exception hierarchy.

Every error raised on bad input derives from :class:`ArcError`.  The CLI maps
the three families onto its exit codes (config 2, data 3, numeric 4).
"""

from __future__ import annotations


class ArcError(Exception):
    """Base class for all package errors."""


class ConfigError(ArcError, ValueError):
    """Invalid configuration value or config file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(ArcError, ValueError):
    """Input data violates a format or domain invariant."""


class NumericError(ArcError, ArithmeticError):
    """A numerical routine produced non-finite values or failed to converge."""


class MalformedRow(DataError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        msg = f"malformed row at line {line}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class NonFiniteValue(DataError):
    def __init__(self, line: int):
        self.line = line
        super().__init__(f"non-finite value at line {line}")


class TimestampGap(DataError):
    def __init__(self, line: int, gap_ms: float, limit_ms: float):
        self.line = line
        self.gap_ms = gap_ms
        super().__init__(
            f"timestamp gap of {gap_ms:g} ms at line {line} exceeds {limit_ms:g} ms"
        )


class NonMonotoneTimestamp(DataError):
    def __init__(self, line: int):
        self.line = line
        super().__init__(f"timestamp does not increase at line {line}")


class EmptyStream(DataError):
    pass


class OverlappingIntervals(DataError):
    pass


class UnknownClass(DataError):
    pass


class InvalidInterval(DataError):
    pass


class UnsynchronizedPair(DataError):
    pass


class SessionMismatch(DataError):
    pass


class SegmentOutOfRange(DataError):
    pass


class ShapeMismatch(DataError):
    pass
