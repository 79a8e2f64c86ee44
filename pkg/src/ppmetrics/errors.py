"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PPMetricsError(Exception):
    """Base class for every error raised by ppmetrics."""


class ValidationError(PPMetricsError, ValueError):
    """A record or study failed validation.

    ``violations`` holds one human-readable message per problem found, and
    ``field`` names the offending input field when there is exactly one.
    """

    def __init__(self, violations: list[str] | str, field: str | None = None):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        self.field = field
        super().__init__("; ".join(self.violations))


class ParseError(PPMetricsError):
    """An input file could not be read as the expected format."""


class NoMeasurementsError(PPMetricsError, ValueError):
    pass


class BaselineError(PPMetricsError, ValueError):
    """No baseline could be resolved for a platform."""


class NoBaselineError(BaselineError):
    pass


class MissingReferenceError(BaselineError):
    pass


class DuplicateError(PPMetricsError):
    """The record is already present in the store."""


class StudyMismatchError(PPMetricsError, ValueError):
    pass


class CorruptLogError(PPMetricsError):
    def __init__(self, seq: int, reason: str):
        self.seq = seq
        super().__init__(f"corrupt event log at seq {seq}: {reason}")


class SnapshotError(PPMetricsError, ValueError):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        super().__init__(f"malformed snapshot at byte offset {offset}: {reason}")
