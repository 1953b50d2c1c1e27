"""Geometric Hardy inequalities on Carnot groups and for general vector fields.

Exact polynomial calculus for frames of vector fields, the factored
p-sub-Laplacian, Hardy deficits by quadrature over compactly supported
test functions, and Rayleigh-quotient probes of the best constant.
"""

from .symbolic import MultiPoly, parse_poly, standard_variables
from .groups import (
    Frame,
    StratifiedDescriptor,
    builtin_frame,
    commutator,
    load_frame,
    starshaped_check,
)
from .calculus import horizontal_gradient, p_sublaplacian_factored
from .hardy import (
    HardyReport,
    HardySpec,
    NormalSpec,
    builtin_spec,
    evaluate_deficit,
    gamma_coefficients,
    optimal_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "MultiPoly",
    "parse_poly",
    "standard_variables",
    "Frame",
    "StratifiedDescriptor",
    "builtin_frame",
    "commutator",
    "load_frame",
    "starshaped_check",
    "horizontal_gradient",
    "p_sublaplacian_factored",
    "HardyReport",
    "HardySpec",
    "NormalSpec",
    "builtin_spec",
    "evaluate_deficit",
    "gamma_coefficients",
    "optimal_gamma",
]
