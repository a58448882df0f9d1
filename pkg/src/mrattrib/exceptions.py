"""Exception and warning classes used across the package."""


class MRAttribError(Exception):
    """Base class for all package errors."""


class InputError(MRAttribError, ValueError):
    """Invalid data or argument values."""


class SchemaError(InputError):
    """Column names or file layout do not match the declared structure."""


class StructureError(InputError):
    """Causal structure is inconsistent (forward or cyclic parent references)."""


class CapacityError(MRAttribError):
    """Exact enumeration requested beyond the configured cap."""


class NumericalError(MRAttribError, ArithmeticError):
    """A numerical routine failed (singular system, non-finite result)."""


class EstimationError(MRAttribError):
    """A nuisance fit failed at a given stage of the estimation plan."""

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"stage {stage}: {message}")
        self.stage = stage


class SeparationWarning(UserWarning):
    """Unpenalized logistic fit appears to diverge (perfect separation)."""


class OverlapWarning(UserWarning):
    """A noticeable fraction of estimated probabilities hit the clipping bounds."""
