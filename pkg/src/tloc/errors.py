"""Exception hierarchy shared by every tloc module."""

from __future__ import annotations


class TlocError(Exception):
    """Base class for all data errors raised by tloc."""


# time codec
class InvalidGrid(TlocError, ValueError):
    pass


class NonFiniteTimestamp(TlocError, ValueError):
    pass


class IndexOutOfRange(TlocError, IndexError):
    pass


class InvalidInterval(TlocError, ValueError):
    pass


# pooling
class InvalidCount(TlocError, ValueError):
    pass


class IndivisibleGrid(TlocError, ValueError):
    pass


class InvalidEmbeddingGrid(TlocError, ValueError):
    pass


# file formats
class ParseError(TlocError):
    """Malformed input text. ``line`` is set for JSON-lines sources."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(TlocError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BadMagic(TlocError):
    pass


class TruncatedFile(TlocError):
    pass


# task formatting
class EmptyRecord(TlocError, ValueError):
    pass


class EmptyField(TlocError, ValueError):
    pass


class EmptyPool(TlocError, ValueError):
    pass


# evaluation
class DuplicatePrediction(TlocError):
    pass


class DuplicateGroundTruth(DuplicatePrediction):
    """Two ground-truth samples share a (video_id, question_id) key."""


# llm client
class LLMError(TlocError):
    pass


class AuthError(LLMError):
    pass


class RetriesExhausted(LLMError):
    pass


class RateLimited(RetriesExhausted):
    """429 or 5xx responses persisted past ``max_retries``."""


class Timeout(RetriesExhausted):
    pass


class MalformedReply(LLMError):
    pass


class UnparseableVerdict(LLMError):
    pass


# generation
class WholeReplyUnparseable(TlocError):
    pass
