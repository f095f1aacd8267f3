"""Numeric experiments: extension operators on grids, decoupling-ratio and
multilinear estimators, the sharpness example families, exponent fitting, and
the exponent-descent arithmetic."""

from .bump import BumpProfile, default_bump
from .extension import GridFunction, WeightSpec, extension_eval, weight_eval
from .families import ExampleFamily, example_family_modulated, example_family_rescaled
from .fitting import ExponentFit, fit_exponent
from .exponents import (
    DescentState,
    descent_iterate,
    eta_tilde,
    kappa_ptilde,
    lower_bound_exponent,
)
from .ratios import dec_ratio, muldec_lhs

__all__ = [
    "BumpProfile",
    "default_bump",
    "GridFunction",
    "WeightSpec",
    "extension_eval",
    "weight_eval",
    "ExampleFamily",
    "example_family_modulated",
    "example_family_rescaled",
    "ExponentFit",
    "fit_exponent",
    "DescentState",
    "descent_iterate",
    "eta_tilde",
    "kappa_ptilde",
    "lower_bound_exponent",
    "dec_ratio",
    "muldec_lhs",
]
