"""Exception types shared across the package."""

from __future__ import annotations

from collections.abc import Iterable


class HarnessError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigError(HarnessError):
    """Invalid task, weight, or policy configuration."""


class UsageError(HarnessError):
    """An operation was invoked with arguments that make no sense."""


class StructuralError(HarnessError):
    """Shape mismatch between an explanation and its sample's tokens."""


class DataError(HarnessError):
    """A record carries values that violate its own invariants."""


class AnnotationConflictError(DataError):
    """Derived human feature sets would assign one token to two classes."""


class ParseError(HarnessError):
    """A file could not be parsed; the message names file, record, and field."""


class ReferentialError(HarnessError):
    """A record references a sample or explanation that does not exist."""


class ConsistencyError(HarnessError):
    """Cross-file contradiction: lengths, checksums, labels, or indices."""


class CoverageError(HarnessError):
    """Samples lack required annotations; carries the offending ids."""

    def __init__(self, message: str, sample_ids: Iterable[str] = ()):
        super().__init__(message)
        self.sample_ids = tuple(sample_ids)


class RegistrationError(HarnessError):
    """An annotator id is unknown to the collection service."""


class LeaseConflictError(HarnessError):
    """A response arrived for a slot the annotator does not currently hold."""
