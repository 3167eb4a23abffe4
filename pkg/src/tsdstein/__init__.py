"""Tempered stable distributions: characteristic functions, sampling and Stein's method."""

from .bias import BiasDistribution, bias_moment, eta, sample_bias
from .charfn import CharFn, cf_compound_poisson, cf_normal, cf_ratio, cf_stable, cf_svgd, cf_tempered
from .distance import DistanceEstimate, kolmogorov, smooth_h3_lower, wasserstein1_empirical
from .errors import DivergenceError, DomainError, InversionError, QuadratureError, SamplingError, TsdError
from .inversion import NumericLaw, invert_cdf, invert_pdf, tsd_law
from .model import StableParams, TsdParams, cumulants, default_grid, levy_density
from .sampling import RngStream, SampleBatch, sample_tempered, sample_truncation
from .stein import SteinSolution, TestFunction, solve_stein, stein_apply

__version__ = "0.1.0"

__all__ = [
    "BiasDistribution", "CharFn", "DistanceEstimate", "DivergenceError", "DomainError",
    "InversionError", "NumericLaw", "QuadratureError", "RngStream", "SampleBatch",
    "SamplingError", "StableParams", "SteinSolution", "TestFunction", "TsdError", "TsdParams",
    "bias_moment", "cf_compound_poisson", "cf_normal", "cf_ratio", "cf_stable", "cf_svgd",
    "cf_tempered", "cumulants", "default_grid", "eta", "invert_cdf", "invert_pdf", "kolmogorov",
    "levy_density", "sample_bias", "sample_tempered", "sample_truncation", "smooth_h3_lower",
    "solve_stein", "stein_apply", "tsd_law", "wasserstein1_empirical",
]
