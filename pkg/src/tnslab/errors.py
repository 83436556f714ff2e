"""Exception types shared across the package.

Validation-style failures derive from ``ValueError`` so that callers (and the
CLI) can treat bad inputs uniformly; resource overruns get their own branch.
"""
from __future__ import annotations


class TnsError(Exception):
    """Base class for package-specific errors."""


class DimensionMismatchError(TnsError, ValueError):
    """Axis extents or bond dimensions do not line up."""


class CapacityError(TnsError):
    """A dense object or contraction intermediate would exceed the size cap."""


class RankError(TnsError, ValueError):
    """A requested bond dimension is below an exact Schmidt rank."""


class NormalizationError(TnsError, ValueError):
    """A state that must be nonzero/normalized is not."""


class InvertibilityError(TnsError, ValueError):
    """A matrix that must be invertible is singular or ill-conditioned."""


class DegeneracyError(TnsError):
    """A spectral splitting step hit a near-degenerate, ambiguous case."""
