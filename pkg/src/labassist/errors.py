"""Error taxonomy shared across the package.

Every error raised by labassist code derives from LabAssistError so callers
can catch the whole family at service boundaries.
"""

from __future__ import annotations


class LabAssistError(Exception):
    """Base class for all labassist errors."""


class MalformedManual(LabAssistError):
    """Manual text does not follow the sectioned header format."""


class DuplicateSectionId(MalformedManual):
    """Two sections in one manual share an id."""


class InvalidDocument(LabAssistError):
    """A ManualDocument violates its invariants (e.g. no sections)."""


class DimensionMismatch(LabAssistError):
    """Vector operands have different lengths."""


class ZeroVector(LabAssistError):
    """Cosine similarity is undefined for an all-zero vector."""


class ModelMismatch(LabAssistError):
    """Embeddings from different model ids may not be scored together."""


class ProviderUnavailable(LabAssistError):
    """Provider could not be reached after the configured retries."""


class ProviderTimeout(ProviderUnavailable):
    """Provider did not answer within the configured timeout."""


class AdvisoryValidationFailed(LabAssistError):
    """Instructional answer still malformed after all regeneration attempts."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class EmptyText(LabAssistError):
    """Operation requires non-empty text."""


class EmptyGroup(LabAssistError):
    """Statistical operation requires at least one value per group."""


class EmptyPanel(LabAssistError):
    """Rubric aggregation requires at least one evaluator."""


class OutOfRangeScore(LabAssistError):
    """Rubric scores must lie on the 1-4 scale."""


class IncompleteDataset(LabAssistError):
    """Evaluation dataset is missing required fields or records."""


class ConfigError(LabAssistError):
    """Service configuration is invalid or references missing paths."""
