"""bildsim: a numerical laboratory for two-level model correspondence.

Three benches: Gaussian classical fields whose covariances map to quantum
density operators, a CHSH/hidden-variable test stand, and coarse-grained
Brownian velocity estimation.
"""

from . import brownian, chsh, fields, linalg
from .errors import (
    BildsimError,
    DegenerateMeasureError,
    DimensionMismatchError,
    NumericalError,
    RegimeError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "brownian",
    "chsh",
    "fields",
    "linalg",
    "BildsimError",
    "ValidationError",
    "DimensionMismatchError",
    "DegenerateMeasureError",
    "NumericalError",
    "RegimeError",
    "__version__",
]
