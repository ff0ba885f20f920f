"""Numerics for bilinear pseudo-differential operators on periodized grids."""
from .lattice import AxisSpec, GridSpec, SampledField, forward_ft, inverse_ft, shear, spectral_derivative, translate
from .weights import WeightGroup, WeightModel

__all__ = [
    "AxisSpec",
    "GridSpec",
    "SampledField",
    "forward_ft",
    "inverse_ft",
    "shear",
    "spectral_derivative",
    "translate",
    "WeightGroup",
    "WeightModel",
]
