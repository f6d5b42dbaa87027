"""Exception types shared across the toolkit."""


class PiirlError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpec(PiirlError):
    """A track specification violates its invariants."""


class OutOfBounds(PiirlError):
    """A query point lies outside the environment grid."""


class EmptyPolicySet(PiirlError):
    """An operation requires at least one policy."""


class DimensionMismatch(PiirlError):
    """Vector/matrix dimensions do not agree."""


class NonFiniteInput(PiirlError):
    """An input contains NaN or infinity."""


class EmptyBuffer(PiirlError):
    """A training buffer contains no cycles."""


class EmptyBatch(PiirlError):
    """A batch reduction received no elements."""


class MissingCache(PiirlError):
    """backward() was called without a forward cache."""


class ShapeMismatch(PiirlError):
    """Tensor shapes do not match the declared layout."""


class NoOverlap(PiirlError):
    """Two trajectories share no common time window."""


class MissingGroundTruth(PiirlError):
    """Ground-truth reward weights are required but absent."""


class SchemaVersionMismatch(PiirlError):
    """A persisted file declares an unsupported format version."""


class ConfigParse(PiirlError):
    """An experiment configuration failed to parse or validate."""


class MissingInput(PiirlError):
    """A required input file does not exist."""
