"""Exception types shared across the package."""

from __future__ import annotations


class KgqaError(Exception):
    """Base class for all package errors."""


class EmptyLabelError(KgqaError):
    """Entity label is empty after trimming."""


class LabelCollisionError(KgqaError):
    """Two distinct entity ids share the same case-insensitive label."""


class UnknownRelationError(KgqaError):
    """Relation label is not a member of the active catalog."""


class CatalogNotFoundError(KgqaError):
    """No built-in catalog or readable file with the given name."""


class DuplicateRelationError(KgqaError):
    """Catalog source contains the same relation label twice."""


class EmptyCatalogError(KgqaError):
    """Catalog source contains no relation labels."""


class EmptyCandidateError(KgqaError):
    """Relation candidate to normalize is empty."""


class MalformedTripleError(KgqaError):
    """Completion did not contain a parseable subject->relation->object line."""


class MalformedChainError(KgqaError):
    """Completion did not contain a parseable relation-chain line."""


class EmptyChainError(KgqaError):
    """Relation chain has no relations to compile."""


class UnresolvableEntityError(KgqaError):
    """Chain element could not be resolved to a graph identifier."""


class LlmFailure(KgqaError):
    """Completion port failed. ``kind`` is one of transport/timeout/malformed."""

    def __init__(self, message: str, kind: str = "transport"):
        super().__init__(message)
        self.kind = kind


class TransportError(KgqaError):
    """Remote query endpoint was unreachable or returned an error status."""


class MalformedResponseError(KgqaError):
    """Remote endpoint replied with a payload we cannot interpret."""


class EmptyMemoryError(KgqaError):
    """Retrieval was requested against an empty fact memory."""


class SchemaError(KgqaError):
    """Dataset record failed validation. Carries the offending record index."""

    def __init__(self, message: str, record_index: int | None = None):
        super().__init__(message)
        self.record_index = record_index
