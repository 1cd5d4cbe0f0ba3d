"""Exception hierarchy shared across the toolkit.

Every error that is part of an operation's contract has its own class so
callers can catch precisely; generic contract violations raise ValueError.
"""

from __future__ import annotations


class XLTError(Exception):
    """Base class for all toolkit errors."""


# --- corpus ---------------------------------------------------------------

class RaggedLine(XLTError):
    """A CoNLL line has fewer columns than the addressed tag column."""

    def __init__(self, line_number: int, line: str, needed: int):
        super().__init__(f"line {line_number}: expected >= {needed} columns: {line!r}")
        self.line_number = line_number
        self.line = line


class InvalidTag(XLTError):
    """A token tag is not O / B-X / I-X, or violates the BIO grammar."""


class EmptyInput(XLTError):
    """Parser received text with no data rows."""


class MissingColumn(XLTError):
    """A TSV row lacks a column named by the schema."""


class LabelOutsideSet(XLTError):
    """A row's label is not in the declared closed label set."""


class MalformedLine(XLTError):
    """A JSONL line could not be decoded or lacks required fields."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


# --- translate ------------------------------------------------------------

class UnsupportedLanguage(XLTError):
    """A requested language is outside a backend's supported set."""


class BackendFailure(XLTError):
    """A backend failed on a request (transport or model error).

    ``index`` is the position of the failing request within the submitted
    batch, when known; ``hop`` marks which leg of a roundtrip failed.
    """

    def __init__(self, message: str, *, code: str = "internal",
                 index: int | None = None, transient: bool = False,
                 hop: int | None = None):
        super().__init__(message)
        self.code = code
        self.index = index
        self.transient = transient
        self.hop = hop


class UndeclaredPair(XLTError):
    """Dictionary translator has no lexicon for the requested pair."""


# --- align ----------------------------------------------------------------

class MalformedPair(XLTError):
    """A Pharaoh token is not of the form ``i-j``."""


class IndexOutOfRange(XLTError):
    """An alignment link points outside the token ranges."""


class LengthMismatch(XLTError):
    """Two parallel sequences have different lengths."""


# --- typology -------------------------------------------------------------

class DimensionMismatch(XLTError):
    """Typological vectors have different dimensions."""


class ZeroVector(XLTError):
    """Cosine similarity is undefined for an all-zero vector."""


class TargetMissingVector(XLTError):
    """The target language has no vector in the typology store."""


class NoCandidate(XLTError):
    """No supported language with a typology vector to fall back to."""


# --- strategy -------------------------------------------------------------

class UnsupportedVariant(XLTError):
    """The strategy spec combines family/variant/schedule illegally."""


class ProjectionCollapse(XLTError):
    """Label projection discarded every instance of a training dataset."""


# --- model ----------------------------------------------------------------

class EmptyPlan(XLTError):
    """A training plan has no instances at all."""


class LabelSetMismatch(XLTError):
    """Datasets in one plan disagree on task or label set."""


class TaskMismatch(XLTError):
    """An instance's task does not match the model's task."""


class LabelOrderMismatch(XLTError):
    """Ensemble members disagree on label order."""


# --- selection ------------------------------------------------------------

class MissingOracleValidation(XLTError):
    """The requested validation variant needs oracle target data."""


class EmptySeries(XLTError):
    """Checkpoint selection received an empty metric series."""


# --- metrics --------------------------------------------------------------

class InvalidBIO(XLTError):
    """A tag sequence violates the BIO grammar."""


class EmptyValues(XLTError):
    """An aggregate was requested over zero values."""


class ZeroTotal(XLTError):
    """Resource availability needs a positive corpus total."""


# --- cli ------------------------------------------------------------------

class ConfigInvalid(XLTError):
    """The run config failed schema validation."""


class BackendUnreachable(XLTError):
    """A configured remote backend did not answer the handshake."""


class StageDependencyMissing(XLTError):
    """A pipeline stage was requested before its inputs exist."""
