"""Limiting covariances and variances of linear statistics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import polynomial as nppoly

from .errors import NonFiniteError, RieszDomainError
from .expansion import (
    CosineCoefficients,
    GegenbauerCoefficients,
    LinearStatistic,
    cosine_coeffs,
    gegenbauer_coeffs,
)
from .quadrature import gauss_legendre
from .special import (
    Exponent,
    Regime,
    cos_half_pi,
    eigen_lambda,
    gegenbauer_table,
    gamma_signed,
    log_gamma,
    log_pochhammer,
    norm_h,
    require_general,
    series_prefactor,
)

__all__ = [
    "Method",
    "ModelParameters",
    "CovarianceEstimate",
    "SmallSMatching",
    "covariance_series",
    "series_terms",
    "covariance_log_gas",
    "covariance_linear_potential",
    "closed_form_power_sum",
    "closed_form_centre_of_mass",
    "closed_form_ls25_even",
    "linear_potential_power_sum",
    "telescoping_sum_lhs",
    "telescoping_sum_rhs",
    "large_p_asymptotic",
    "pair_potential_statistic_variance",
    "small_s_matching",
    "covariance",
]

STOP_RUN = 5
STOP_RELATIVE = 1e-14
TAIL_FACTOR = 10.0
DERIV_STEP = 1e-6


class Method(str, enum.Enum):
    GEGENBAUER_SERIES = "GegenbauerSeries"
    COSINE_SERIES = "CosineSeries"
    DERIVATIVE_INTEGRAL = "DerivativeIntegral"
    CLOSED_FORM = "ClosedForm"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class ModelParameters:
    beta: float
    s: float
    conjectural: bool = False

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise RieszDomainError(f"beta must be positive and finite, got {self.beta}")
        Exponent(self.s, self.conjectural)

    @property
    def exponent(self) -> Exponent:
        return Exponent(self.s, self.conjectural)


@dataclass(frozen=True)
class CovarianceEstimate:
    value: float
    method: Method
    error_bound: float = 0.0
    terms_used: Optional[int] = None
    converged: bool = True
    conjectural: bool = False

    def as_row(self) -> dict:
        return {
            "value": self.value,
            "method": self.method.value,
            "error_bound": self.error_bound,
            "terms_used": self.terms_used,
            "converged": self.converged,
            "conjectural": self.conjectural,
        }


def _truncated_sum(terms: np.ndarray):
    """Sum terms[1:], stopping after STOP_RUN consecutive negligible terms.

    Returns (value, error_bound, terms_used, converged).
    """
    total = 0.0
    quiet = 0
    last = 0.0
    used = 0
    for n in range(1, terms.size):
        t = float(terms[n])
        total += t
        used = n
        last = t
        if abs(t) <= STOP_RELATIVE * abs(total):
            quiet += 1
            if quiet >= STOP_RUN:
                return total, TAIL_FACTOR * abs(last), used, True
        else:
            quiet = 0
    bound = TAIL_FACTOR * abs(last)
    # ran out of coefficients: accept only if the last terms are already small
    converged = bound <= 1e-8 * max(abs(total), 1e-300) or bound == 0.0
    return total, bound, used, converged


def series_terms(f: GegenbauerCoefficients, g: GegenbauerCoefficients, params: ModelParameters, form: str = "prefactored"):
    """Individual terms of the Gegenbauer covariance series (index 0 is set to zero).

    ``form="prefactored"`` uses the collapsed gamma prefactor over (n + s/2);
    ``form="norm-ratio"`` uses sgn(s) h_n / lambda_n computed separately.
    """
    s = require_general(params.s)
    if f.s != s or g.s != s:
        raise RieszDomainError(f"coefficients built for s={f.s}, {g.s} but model has s={s}")
    m = min(f.coeffs.size, g.coeffs.size)
    n = np.arange(m, dtype=float)
    prod = f.coeffs[:m] * g.coeffs[:m]
    if form == "prefactored":
        weight = series_prefactor(s) / (n + s / 2.0)
    elif form == "norm-ratio":
        weight = math.copysign(1.0, s) * norm_h(s, n) / eigen_lambda(s, n)
    else:
        raise ValueError(f"unknown form {form!r}")
    terms = weight * prod / params.beta
    terms[0] = 0.0
    return terms


def covariance_series(f: GegenbauerCoefficients, g: GegenbauerCoefficients, params: ModelParameters) -> CovarianceEstimate:
    """Limiting Cov(F, G) as the Gegenbauer series over n >= 1."""
    terms = series_terms(f, g, params)
    value, bound, used, ok = _truncated_sum(terms)
    return CovarianceEstimate(value, Method.GEGENBAUER_SERIES, bound, used, ok)


def covariance_log_gas(f: CosineCoefficients, g: CosineCoefficients, beta: float) -> CovarianceEstimate:
    """(2/beta) sum_{n>=1} n f_n^c g_n^c for the logarithmic gas."""
    if not beta > 0:
        raise RieszDomainError("beta must be positive")
    m = min(f.coeffs.size, g.coeffs.size)
    if m == 0:
        raise RieszDomainError("cosine coefficient vectors must be nonempty")
    terms = np.zeros(m + 1)
    terms[1:] = 2.0 / beta * np.arange(1, m + 1) * f.coeffs[:m] * g.coeffs[:m]
    value, bound, used, ok = _truncated_sum(terms)
    return CovarianceEstimate(value, Method.COSINE_SERIES, bound, used, ok)


def _derivative(f: LinearStatistic):
    if f.is_poly:
        d = nppoly.polyder(np.array(f.poly)) if len(f.poly) > 1 else np.array([0.0])
        return lambda x: nppoly.polyval(x, d), max(len(d) - 1, 0)

    def df(x):
        x = np.asarray(x, dtype=float)
        lo = np.maximum(x - DERIV_STEP, -1.0)
        hi = np.minimum(x + DERIV_STEP, 1.0)
        val = (f(hi) - f(lo)) / (hi - lo)
        if not np.all(np.isfinite(val)):
            raise NonFiniteError(f"statistic {f.label!r} is not differentiable on [-1, 1]")
        return val

    return df, None


def covariance_linear_potential(f: LinearStatistic, g: LinearStatistic, beta: float) -> CovarianceEstimate:
    """(1/(2 beta)) int f'(x) g'(x) dx, the s = -1 (linear potential) formula."""
    if not beta > 0:
        raise RieszDomainError("beta must be positive")
    df, df_deg = _derivative(f)
    dg, dg_deg = _derivative(g)
    if df_deg is not None and dg_deg is not None:
        order = max(1, (df_deg + dg_deg) // 2 + 1)
    else:
        order = 128
    rule = gauss_legendre(order)
    value = float(np.dot(rule.weights, df(rule.nodes) * dg(rule.nodes))) / (2.0 * beta)
    return CovarianceEstimate(value, Method.DERIVATIVE_INTEGRAL, 0.0, None, True)


def linear_potential_power_sum(p: int, beta: float) -> float:
    """p^2 / ((2p - 1) beta): the power-sum variance for the linear potential."""
    return p * p / ((2.0 * p - 1.0) * beta)


def _sgn_gamma_cos(s: float):
    """log|sgn(s) Gamma(s) cos(pi s/2)| and its sign."""
    lg, sg = log_gamma(s)
    c = cos_half_pi(s)
    return lg + math.log(abs(c)), math.copysign(1.0, s) * sg * math.copysign(1.0, c)


def _power_sum_domain(p: int, params: ModelParameters) -> float:
    if int(p) != p or p < 1:
        raise RieszDomainError("power p must be a positive integer")
    s = params.s
    reg = params.exponent.regime
    if reg is Regime.GENERAL:
        return s
    if reg is Regime.CONJECTURAL_EXTENDED and params.conjectural:
        return s
    raise RieszDomainError(f"closed form undefined in regime {reg.value} (s={s})")


def closed_form_centre_of_mass(params: ModelParameters) -> float:
    """Variance of sum x_j through the duplication-formula form (p = 1)."""
    s = _power_sum_domain(1, params)
    lg1, sg1 = log_gamma((s + 1.0) / 2.0)
    lg2, sg2 = log_gamma(s / 2.0)
    c = cos_half_pi(s)
    logv = math.log(abs(c)) + lg1 - 0.5 * math.log(math.pi) - math.log(abs(1.0 + s / 2.0)) - lg2
    sign = math.copysign(1.0, s) * math.copysign(1.0, c) * sg1 * sg2 * math.copysign(1.0, 1.0 + s / 2.0)
    return sign * math.exp(logv) / (s * s * params.beta)


def closed_form_power_sum(p: int, params: ModelParameters) -> CovarianceEstimate:
    """Product-of-gammas variance of sum_j x_j^p (odd and even p differ)."""
    s = _power_sum_domain(p, params)
    lgc, sgc = _sgn_gamma_cos(s)
    if p % 2:
        ln, _ = log_gamma(p / 2.0 + 1.0)
        ld, sd = log_gamma((s + p + 1.0) / 2.0)
    else:
        ln = math.log(p / 2.0) + log_gamma((p + 1.0) / 2.0)[0]
        ld, sd = log_gamma((s + p) / 2.0 + 1.0)
    denom = s + 2.0 * p
    logv = lgc - (s - 2.0) * math.log(2.0) - math.log(abs(denom)) + 2.0 * (ln - ld) - math.log(math.pi)
    value = sgc * math.copysign(1.0, denom) * math.exp(logv) / params.beta
    if p == 1:
        ref = closed_form_centre_of_mass(params)
        if abs(value - ref) > 1e-13 * abs(ref):
            raise ArithmeticError(f"odd-p closed form {value!r} disagrees with centre-of-mass form {ref!r}")
    return CovarianceEstimate(value, Method.CLOSED_FORM, 0.0, None, True, params.exponent.regime is Regime.CONJECTURAL_EXTENDED)


def closed_form_ls25_even(p: int, params: ModelParameters) -> CovarianceEstimate:
    """Even-p variance written as sigma_2^2 2^{2(p-2)} (p/2)^3 (2+s)/(p+s) alpha_p(s)."""
    if int(p) != p or p < 2 or p % 2:
        raise RieszDomainError("this form needs an even power p >= 2")
    s = require_general(params.s)
    beta = params.beta
    c = cos_half_pi(s)
    # sigma_2^2
    l_a, _ = log_gamma((s + 1.0) / 2.0)
    l_b, _ = log_gamma(s / 2.0 + 3.0)
    log_sig2 = -math.log(beta) - 0.5 * math.log(math.pi) + math.log(c) + l_a - math.log(abs(s)) - math.log(2.0 + s) - l_b
    # alpha_p(s)
    l1, _ = log_gamma((p + 1.0) / 2.0)
    l2, _ = log_gamma(s / 2.0 + 1.0)
    l3, _ = log_gamma(s / 2.0 + 3.0)
    l4, _ = log_gamma((p + s) / 2.0 + 1.0)
    l5, _ = log_gamma((p + s) / 2.0)
    log_alpha = (
        (8.0 - 2.0 * p) * math.log(2.0) + 2.0 * l1 + l2 + l3
        - math.log(math.pi) - math.log(p) - math.log(2.0 * p + s) - l4 - l5
    )
    logv = log_sig2 + 2.0 * (p - 2.0) * math.log(2.0) + 3.0 * math.log(p / 2.0) + math.log((2.0 + s) / (p + s)) + log_alpha
    return CovarianceEstimate(math.exp(logv), Method.CLOSED_FORM, 0.0, None, True)


def _telescoping_domain(p: int, n: int, s: float):
    require_general(s)
    if p < 1 or n < 0 or n > (p - 1) // 2:
        raise RieszDomainError(f"need 0 <= n <= floor((p-1)/2); got p={p}, n={n}")


def telescoping_sum_lhs(p: int, n: int, s: float) -> float:
    """sum_{k=0}^{n} (s/2 + p - 2k) / (k! (s/2)_{p+1-k})^2."""
    _telescoping_domain(p, n, s)
    nu = s / 2.0
    total = 0.0
    for k in range(n + 1):
        lp, _ = log_pochhammer(nu, p + 1 - k)
        lk = log_gamma(k + 1.0)[0]
        total += (nu + p - 2 * k) * math.exp(-2.0 * (lk + lp))
    return total


def telescoping_sum_rhs(p: int, n: int, s: float) -> float:
    """1/(n!)^2 * 1/(s/2 + p) * 1/((s/2)_{p-n})^2."""
    _telescoping_domain(p, n, s)
    nu = s / 2.0
    lp, _ = log_pochhammer(nu, p - n)
    ln = log_gamma(n + 1.0)[0]
    return math.exp(-2.0 * (ln + lp)) / (nu + p)


def large_p_asymptotic(p, params: ModelParameters) -> float:
    """Leading large-p variance of sum x_j^p.

    Stirling on the power-sum closed form gives
    sgn(s) Gamma(s) cos(pi s/2) / (pi beta 2^s) (2/p)^s, i.e. the shape
    sgn(s) cos(pi s/2)/(4 pi beta) (2/p)^s times Gamma(s) 2^(2-s). With that
    factor the s -> -1 limit is p/(2 beta), as it must be.
    """
    s = require_general(params.s)
    p = np.asarray(p, dtype=float)
    shape = math.copysign(1.0, s) * cos_half_pi(s) / (4.0 * math.pi * params.beta) * (2.0 / p) ** s
    out = shape * gamma_signed(s) * 2.0 ** (2.0 - s)
    return out[()] if np.ndim(out) == 0 else out


def pair_potential_statistic_variance(y: float, params: ModelParameters, nmax: int = 4096) -> CovarianceEstimate:
    """Partial sum of the variance of f(x) = Phi_s(x, y), with a convergence verdict.

    Terms are grouped into dyadic blocks [2^k, 2^{k+1}); the slope of log2
    of the block sums over the last four blocks estimates the growth
    exponent. A negative slope means the series converges.
    """
    s = require_general(params.s)
    if not -1.0 <= y <= 1.0:
        raise RieszDomainError(f"y={y} outside [-1, 1]")
    if nmax < 64:
        raise RieszDomainError("nmax must be at least 64 to classify convergence")
    n = np.arange(nmax + 1, dtype=float)
    cn = gegenbauer_table(s / 2.0, nmax, y)
    # sgn(s) lambda_n / h_n = (n + s/2) / (sgn(s) * prefactor): the reciprocal of the
    # covariance-series prefactor, not the prefactor itself
    terms = (n + s / 2.0) * cn**2 / (series_prefactor(s) * params.beta)
    terms[0] = 0.0
    value = float(np.sum(terms))
    kmax = int(math.floor(math.log2(nmax + 1)))
    blocks = np.array([terms[2**k : 2 ** (k + 1)].sum() for k in range(kmax)])
    tail = blocks[-4:]
    if np.any(tail <= 0):
        slope = 0.0
    else:
        slope = float(np.polyfit(np.arange(tail.size), np.log2(tail), 1)[0])
    converged = slope < 0.0
    if converged:
        r = 2.0**slope
        bound = float(tail[-1] * r / (1.0 - r))
    else:
        bound = float(tail[-1])
    return CovarianceEstimate(value, Method.GEGENBAUER_SERIES, bound, nmax, converged)


class SmallSMatching(NamedTuple):
    """|s| times the Gegenbauer covariance at s = +eps and s = -eps, and the log-gas value."""

    plus: float
    minus: float
    log_gas: float


def small_s_matching(f: LinearStatistic, g: LinearStatistic, beta: float, eps: float = 1e-3, nmax: int = 64) -> SmallSMatching:
    if not 0.0 < eps <= 1e-2:
        raise RieszDomainError("eps must lie in (0, 1e-2]")
    vals = []
    for s in (eps, -eps):
        params = ModelParameters(beta, s)
        fc = gegenbauer_coeffs(f, s, nmax)
        gc = gegenbauer_coeffs(g, s, nmax)
        vals.append(abs(s) * covariance_series(fc, gc, params).value)
    log_gas = covariance_log_gas(cosine_coeffs(f, nmax), cosine_coeffs(g, nmax), beta).value
    return SmallSMatching(vals[0], vals[1], log_gas)


def covariance(f: LinearStatistic, g: LinearStatistic, params: ModelParameters, nmax: Optional[int] = None) -> CovarianceEstimate:
    """Dispatch on the regime: cosine series at s=0, derivative integral at s=-1, Gegenbauer series otherwise."""
    reg = params.exponent.regime
    if reg is Regime.LOGARITHMIC:
        n = nmax or 64
        return covariance_log_gas(cosine_coeffs(f, n), cosine_coeffs(g, n), params.beta)
    if reg is Regime.LINEAR:
        return covariance_linear_potential(f, g, params.beta)
    if reg is Regime.CONJECTURAL_EXTENDED:
        raise RieszDomainError("series covariance is only available for |s| < 1")
    fc = gegenbauer_coeffs(f, params.s, nmax)
    gc = gegenbauer_coeffs(g, params.s, nmax)
    return covariance_series(fc, gc, params)
