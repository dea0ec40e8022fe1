"""Automatic differentiation: scalar tape, dual numbers and input jets."""

from .dual import Dual
from .jet import Jet, input_jet
from .tape import NonFiniteError, Scalar, Tape, grad, hvp, value_and_grad

__all__ = [
    "Dual",
    "Jet",
    "NonFiniteError",
    "Scalar",
    "Tape",
    "grad",
    "hvp",
    "input_jet",
    "value_and_grad",
]
