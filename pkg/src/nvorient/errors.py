"""Exception and warning types shared across the package."""


class NVOrientError(Exception):
    """Base class for all package errors."""


class FieldInputError(NVOrientError, ValueError):
    """A field vector or physical parameter is malformed or non-finite."""


class FrameError(NVOrientError, ValueError):
    """A field configuration is expressed in the wrong reference frame."""


class DegeneracyError(NVOrientError):
    """The |0> eigenstate cannot be identified unambiguously."""


class OrientationError(NVOrientError, ValueError):
    """An orientation is not an orthonormal (x, z) pair."""


class DegenerateStepError(NVOrientError):
    """A rotation step cannot be reconstructed from the difference vectors.

    ``fallback`` holds the triad-solver result when the rotation is still
    well defined (e.g. a rotation about the defect x or z axis), else None.
    """

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback


class UselessWorkingPointError(NVOrientError):
    """The frequency slope vanishes at the requested working point."""


class IndeterminateSignError(NVOrientError):
    """The expected axial Stark shift is below the noise floor."""


class NoSignalError(NVOrientError):
    """A fitted pattern amplitude is not distinguishable from the residual."""


class EstimationError(NVOrientError):
    """Measurements are mutually inconsistent (e.g. cones do not intersect)."""


class RegimeWarning(UserWarning):
    """Fields are outside the regime where a perturbative formula holds."""


class WorkingPointWarning(UserWarning):
    """A derivative vanishes at the requested working point."""
