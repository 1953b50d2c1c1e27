"""Quadrature, test functions and Rayleigh-quotient probing."""

from .quadrature import BoxRegion, NumericError, QuadratureRule, integrate, integrate_points
from .bumps import TestFunction, admissible, make_bump, make_log_profile

__all__ = [
    "BoxRegion",
    "NumericError",
    "QuadratureRule",
    "integrate",
    "integrate_points",
    "TestFunction",
    "admissible",
    "make_bump",
    "make_log_profile",
]
