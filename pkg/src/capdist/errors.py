"""Exception types shared across the package."""

from __future__ import annotations


class CapdistError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(CapdistError):
    """Tensor shapes disagree with each other or with declared alphabet sizes."""


class NotAProbability(CapdistError):
    """A probability vector has a negative entry or a row sum off by >= 1e-9."""


class NegativeDistortion(CapdistError):
    """A distortion entry is negative or non-finite."""


class ZeroProbabilityConditioning(CapdistError):
    """Posterior requested for an output with zero conditional probability."""


class AlphabetOverflow(CapdistError):
    """Super-symbol alphabet would exceed the configured size cap."""


class AlphabetTooLarge(CapdistError):
    """Operation restricted to small alphabets received a larger one."""


class InfeasibleDistortion(CapdistError):
    """Distortion budget below the minimum achievable estimation cost."""

    def __init__(self, message: str, d_min: float | None = None):
        super().__init__(message)
        self.d_min = d_min


class InfeasibleConstraints(CapdistError):
    """No input distribution satisfies every cost budget simultaneously."""


class SolverNonmonotone(CapdistError):
    """A computed tradeoff curve violated monotonicity or concavity beyond tolerance."""


class NoZeroCostLetter(CapdistError):
    """Ratio formula needs a zero-cost input letter and none exists."""


class NotCertified(CapdistError):
    """Max-min solver could not certify its duality gap and no fallback applies."""


class ConvergenceWarning(UserWarning):
    """Iteration cap reached before the requested tolerance; result may be inexact."""
