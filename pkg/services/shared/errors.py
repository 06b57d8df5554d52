"""Exception hierarchy shared by every package.

The CLI maps these onto process exit codes, so library code raises the most
specific class available instead of a bare Exception.
"""

from typing import Any


class FeatureSelectionError(Exception):
    """Base class for all errors raised by the platform."""


class ConfigError(FeatureSelectionError):
    """Invalid or inconsistent configuration."""


class DataError(FeatureSelectionError):
    """Dataset could not be loaded or does not satisfy its invariants."""


class EmptyMaskError(FeatureSelectionError, ValueError):
    """A feature or instance mask selects nothing where at least one bit is required."""


class UndefinedCorrelationError(FeatureSelectionError, ValueError):
    """Rank correlation is undefined because one vector has zero variance."""


class DegenerateSnapshotError(FeatureSelectionError):
    """All probe subsets scored the same under the original function."""


class InvariantViolationError(FeatureSelectionError):
    """An internal invariant (for example the instance-mask cap) was broken."""


class EvaluationError(FeatureSelectionError):
    """A run aborted part way through.

    Attributes:
        partial_report: History collected before the failure, if any
    """

    def __init__(self, message: str, partial_report: Any | None = None) -> None:
        super().__init__(message)
        self.partial_report = partial_report
