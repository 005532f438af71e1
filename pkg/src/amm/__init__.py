"""Randomized approximate matrix multiplication.

Random-walk and sketching estimators for products of two or more matrices,
with exact covariance oracles and (epsilon, delta) sample planning.
"""
from .decomp import StochasticDecomposition, decompose, product_norm_1q
from .diag import Accuracy, CovarianceReport, NormKind, complexity_table, plan_samples
from .errors import AMMError
from .matcore import INF, NAIVE, STRASSEN, MultiplyBackend, elementwise_norm, error_norms, multiply_chain_exact, multiply_exact
from .sampler import RngStream, build_alias
from .sketch import (
    COLUMN_SAMPLE,
    FROBENIUS_OPTIMAL,
    MAX_NORM_OPTIMAL,
    TUG_OF_WAR,
    UNIFORM,
    SamplingWeights,
    estimate_multi_matrix,
    estimate_two_matrix,
)
from .walk import PROPORTIONAL_D0, PROPORTIONAL_D0_SQUARED, QChoice, build_plan, estimate_walk

__version__ = "0.1.0"

__all__ = [
    "AMMError",
    "Accuracy",
    "COLUMN_SAMPLE",
    "CovarianceReport",
    "FROBENIUS_OPTIMAL",
    "INF",
    "MAX_NORM_OPTIMAL",
    "MultiplyBackend",
    "NAIVE",
    "NormKind",
    "PROPORTIONAL_D0",
    "PROPORTIONAL_D0_SQUARED",
    "QChoice",
    "RngStream",
    "STRASSEN",
    "SamplingWeights",
    "StochasticDecomposition",
    "TUG_OF_WAR",
    "UNIFORM",
    "build_alias",
    "build_plan",
    "complexity_table",
    "decompose",
    "elementwise_norm",
    "error_norms",
    "estimate_multi_matrix",
    "estimate_two_matrix",
    "estimate_walk",
    "multiply_chain_exact",
    "multiply_exact",
    "plan_samples",
    "product_norm_1q",
]
