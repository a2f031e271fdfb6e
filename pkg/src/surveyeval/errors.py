"""Exception hierarchy for the evaluation pipeline.

Every error carries a ``kind`` used to map failures onto CLI exit codes
and service error payloads: "validation" -> 2, "provider" -> 3,
"verify" -> 4.
"""

from __future__ import annotations


class SurveyEvalError(Exception):
    kind = "validation"


# --- input / validation failures ---------------------------------------


class MissingFile(SurveyEvalError):
    pass


class MalformedManifest(SurveyEvalError):
    pass


class DuplicateId(MalformedManifest):
    pass


class UnpairedGeneratedEntry(MalformedManifest):
    pass


class MalformedConfig(SurveyEvalError):
    pass


class DecompositionError(SurveyEvalError):
    """Facet-tagged failure while decomposing a survey document."""

    def __init__(self, facet: str, message: str):
        super().__init__(f"{facet}: {message}")
        self.facet = facet


class NoHeadings(SurveyEvalError):
    pass


class DuplicateReferenceKey(SurveyEvalError):
    pass


class DimensionMismatch(SurveyEvalError):
    pass


class ZeroVector(SurveyEvalError):
    pass


class EmptyHumanSide(SurveyEvalError):
    pass


class EmptySide(SurveyEvalError):
    pass


class CorruptIndex(SurveyEvalError):
    pass


class InvalidDepth(SurveyEvalError):
    pass


class ScaleMismatch(SurveyEvalError):
    pass


class PreconditionError(SurveyEvalError):
    pass


class PipelineOrderError(SurveyEvalError):
    """A stage was invoked before the stage it depends on."""


# --- provider failures ---------------------------------------------------


class ProviderUnavailable(SurveyEvalError):
    kind = "provider"


class JudgeUnavailable(ProviderUnavailable):
    pass


class UnparseableVerdict(SurveyEvalError):
    """The judge answered, but not in the required machine-readable form."""

    kind = "provider"


class TieVerdict(UnparseableVerdict):
    """Pairwise judge refused to pick a side."""


# --- verification --------------------------------------------------------


class VerificationMismatch(SurveyEvalError):
    kind = "verify"
