"""Limiting covariances of linear statistics for the one-dimensional Riesz gas on [-1, 1]."""

from .covariance import (
    CovarianceEstimate,
    Method,
    ModelParameters,
    closed_form_ls25_even,
    closed_form_power_sum,
    covariance_linear_potential,
    covariance_log_gas,
    covariance_series,
    large_p_asymptotic,
    pair_potential_statistic_variance,
    small_s_matching,
    telescoping_sum_lhs,
    telescoping_sum_rhs,
)
from .errors import ConvergenceError, NonFiniteError, RieszDomainError
from .expansion import (
    CosineCoefficients,
    GegenbauerCoefficients,
    LinearStatistic,
    cosine_coeffs,
    gegenbauer_coeffs,
    monomial_gegenbauer_expansion,
    parse_statistic,
)
from .special import Exponent, Regime, eigen_lambda, gegenbauer, log_gamma, norm_h

__version__ = "0.1.0"
