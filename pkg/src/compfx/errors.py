"""Exception types shared across the package.

The CLI maps these onto process exit codes: validation and shape problems
exit 2, data-quality rejections exit 3, embedding-provider failures exit 4.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PipelineError):
    """An input value, parameter, or invariant check failed."""


class ShapeError(ValidationError):
    """Companion arrays disagree on a dimension; the message names the axis."""


class DegenerateHistogramError(PipelineError):
    """An intensity histogram has fewer than two occupied levels."""


class DataQualityError(PipelineError):
    """Input layers failed a quality gate and the sample was rejected."""

    def __init__(self, message: str, *, mean_abs: float | None = None,
                 max_abs: float | None = None) -> None:
        super().__init__(message)
        self.mean_abs = mean_abs
        self.max_abs = max_abs


class ManifestError(ValidationError):
    """A manifest file is malformed or internally inconsistent."""


class ProviderError(PipelineError):
    """An embedding provider failed to produce a usable response."""


class DegenerateDirectionError(PipelineError):
    """A directional similarity is undefined because a difference vanishes."""


class NoReferenceChangeError(DegenerateDirectionError):
    """Reference and source embeddings coincide; no reference direction."""


class NoGeneratedChangeError(DegenerateDirectionError):
    """Generated and source embeddings coincide; no output direction."""
