"""Exception hierarchy shared by all bildsim modules."""


class BildsimError(Exception):
    """Base class for all bildsim errors."""


class ValidationError(BildsimError, ValueError):
    """Input violates a structural invariant (shape, symmetry, finiteness)."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible dimensions."""


class DegenerateMeasureError(ValidationError):
    """Covariance trace is (numerically) zero; normalized maps are undefined."""


class NumericalError(BildsimError):
    """A computation produced non-finite values or failed to converge."""


class RegimeError(BildsimError):
    """Requested estimate is outside its validity regime (time scales, step size)."""
