"""Evaluation of transform-method solution formulas for half-line dispersive problems."""

from .dispersion import Dispersion, num_boundary_conditions, symmetries, cj_coefficients, check_compatibility

__all__ = [
    "Dispersion",
    "num_boundary_conditions",
    "symmetries",
    "cj_coefficients",
    "check_compatibility",
]
