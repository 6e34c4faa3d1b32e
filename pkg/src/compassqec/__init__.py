"""Elongated compass codes under biased circuit noise, with correlated matching decoders."""

from ._backend import BACKEND
from .codes import Deformation, StabilizerCode, make_code
from .noise import NoiseParams

__version__ = "0.1.0"

__all__ = ["BACKEND", "Deformation", "NoiseParams", "StabilizerCode", "make_code", "__version__"]
