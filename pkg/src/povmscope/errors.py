"""Exception types raised across the package.

Every error deriving from :class:`PovmScopeError` may carry a ``stage``
attribute naming the pipeline stage that failed (set by the pipeline
drivers), so batch runners can record failures without aborting.
"""

from __future__ import annotations


class PovmScopeError(Exception):
    """Base class for all package errors."""

    stage: str | None = None


class InvalidInputError(PovmScopeError):
    """Input violates a precondition (non-finite, wrong shape, non-unitary...)."""


class NonphysicalStateError(InvalidInputError):
    """A Bloch vector lies outside the unit ball, or a density matrix is invalid."""


class NotPsdError(PovmScopeError):
    """A matrix required to be positive semidefinite has a significant negative eigenvalue."""


class DegenerateHullError(PovmScopeError):
    """Point cloud is (numerically) confined to a lower-dimensional affine subspace.

    The caller should reduce the working dimension and retry.
    """


class DegenerateDataError(PovmScopeError):
    """All data columns coincide within threshold; no signal to reduce."""


class InfeasibleError(PovmScopeError):
    """No restart of the constrained minimizer produced a feasible point."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class FitError(PovmScopeError):
    """An estimation routine failed to converge or lacks enough data."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class LiftError(PovmScopeError):
    """Fitted ellipsoid cannot be mapped back to a physical (Q, t) pair."""


class FrameError(PovmScopeError):
    """Reference frame cannot be fixed (rank deficit or unusable anchors)."""


class UndefinedFidelityError(PovmScopeError):
    """Fidelity is undefined (zero-trace operator)."""
