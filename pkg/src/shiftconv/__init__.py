"""Numerical toolkit for shifted convolution sums of automorphic coefficients."""

from .coefficients import CoefficientTable, gen_divisor, gen_random_model, gen_ramanujan, gen_sym_power
from .convolution import ShiftedSumSpec, compute_B, exponent_scan
from .delta_method import DeltaExpansion, evaluate_delta, g_weight
from .dual_sum import DualSumParams, GammaData, dual_sum_check, gamma_factor
from .errors import ShiftconvError

__version__ = "0.1.0"

__all__ = [
    "CoefficientTable", "gen_divisor", "gen_random_model", "gen_ramanujan", "gen_sym_power",
    "ShiftedSumSpec", "compute_B", "exponent_scan", "DeltaExpansion", "evaluate_delta",
    "g_weight", "DualSumParams", "GammaData", "dual_sum_check", "gamma_factor", "ShiftconvError",
]
