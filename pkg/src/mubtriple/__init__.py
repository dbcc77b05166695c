"""Phase-space uncertainty relations and entanglement certification with
three mutually unbiased quadratures (x, r, s)."""

__version__ = "0.1.0"

from .errors import (DegenerateAxesError, FitError, GridFormatError,
                     InvalidInputError, MubError)
from .quadrature import MubTriple, QuadratureAxis
from .gaussian import GaussianState, LinearObservable
from .spdc import OpticalScaling, SpdcParams

__all__ = [
    "DegenerateAxesError", "FitError", "GridFormatError", "InvalidInputError",
    "MubError", "MubTriple", "QuadratureAxis", "GaussianState",
    "LinearObservable", "OpticalScaling", "SpdcParams",
]
