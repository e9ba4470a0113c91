"""Special functions and model constants.

Everything that involves gamma ratios is evaluated in log space with an
explicit sign, so that degrees of several hundred do not overflow.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import RieszDomainError

__all__ = [
    "Regime",
    "Exponent",
    "log_gamma",
    "gamma_signed",
    "log_pochhammer",
    "sinpi",
    "cos_half_pi",
    "gegenbauer",
    "gegenbauer_table",
    "gegenbauer_at_one",
    "norm_h",
    "eigen_lambda",
    "h_over_lambda",
    "series_prefactor",
    "schrodinger_eigenvalue",
    "require_general",
    "check_quadrature_exponent",
]

# Lanczos approximation, g = 7, nine terms (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

S_WARN = 0.95
S_CLAMP = 0.99


class Regime(enum.Enum):
    LOGARITHMIC = "logarithmic"
    LINEAR = "linear"
    GENERAL = "general"
    CONJECTURAL_EXTENDED = "conjectural-extended"


@dataclass(frozen=True)
class Exponent:
    """Riesz exponent ``s`` together with its regime.

    ``-2 < s < -1`` is only accepted with ``conjectural=True``.
    """

    s: float
    conjectural: bool = False

    def __post_init__(self):
        s = float(self.s)
        if not math.isfinite(s):
            raise RieszDomainError(f"exponent must be finite, got {s}")
        if s >= 1.0 or s <= -2.0:
            raise RieszDomainError(f"exponent s={s} outside (-2, 1)")
        if -2.0 < s < -1.0 and not self.conjectural:
            raise RieszDomainError(
                f"s={s} lies in the conjectural range (-2,-1); pass conjectural=True"
            )
        object.__setattr__(self, "s", s)

    @property
    def regime(self) -> Regime:
        if self.s == 0.0:
            return Regime.LOGARITHMIC
        if self.s == -1.0:
            return Regime.LINEAR
        if abs(self.s) < 1.0:
            return Regime.GENERAL
        return Regime.CONJECTURAL_EXTENDED

    @property
    def nu(self) -> float:
        """Gegenbauer order s/2."""
        return self.s / 2.0


def sinpi(x):
    """sin(pi x) with exact argument reduction (accurate near the integers)."""
    x = np.asarray(x, dtype=float)
    k = np.round(x)
    r = x - k
    sign = np.where(np.mod(k, 2.0) == 0.0, 1.0, -1.0)
    out = sign * np.sin(np.pi * r)
    return out[()] if out.ndim == 0 else out


def cos_half_pi(s):
    """cos(pi s / 2), written as sin(pi (1-|s|)/2) so that s -> +-1 keeps full relative accuracy."""
    s = np.asarray(s, dtype=float)
    out = sinpi((1.0 - np.abs(s)) / 2.0)
    return out[()] if np.ndim(out) == 0 else out


def _lanczos_log_gamma(x):
    # valid for x >= 0.5
    xm1 = x - 1.0
    acc = np.full_like(xm1, _LANCZOS_COEF[0])
    for k in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[k] / (xm1 + k)
    t = xm1 + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm1 + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(x):
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``.

    Works elementwise on arrays. Raises :class:`RieszDomainError` at the
    poles x = 0, -1, -2, ...
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)):
        raise RieszDomainError("log_gamma argument must be finite")
    if np.any((xa <= 0.0) & (xa == np.round(xa))):
        raise RieszDomainError(f"Gamma has a pole at non-positive integer argument {x}")
    value = np.empty_like(xa)
    sign = np.ones_like(xa)
    hi = xa >= 0.5
    if np.any(hi):
        value[hi] = _lanczos_log_gamma(xa[hi])
    lo = ~hi
    if np.any(lo):
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        xl = xa[lo]
        sp = sinpi(xl)
        value[lo] = math.log(math.pi) - np.log(np.abs(sp)) - _lanczos_log_gamma(1.0 - xl)
        sign[lo] = np.sign(sp)
        # near zero pi*x underflows into few subnormal values; -log|x| - gamma*x is exact to O(x^2)
        tiny = np.abs(xl) < 1e-8
        if np.any(tiny):
            xt = xl[tiny]
            idx = np.flatnonzero(lo)[tiny]
            value.flat[idx] = -np.log(np.abs(xt)) - np.euler_gamma * xt
            sign.flat[idx] = np.sign(xt)
    if xa.ndim == 0:
        return float(value), float(sign)
    return value, sign


def gamma_signed(x):
    """Gamma(x) assembled from :func:`log_gamma`."""
    lg, sg = log_gamma(x)
    return sg * np.exp(lg)


def log_pochhammer(a, m):
    """``(log|(a)_m|, sign)`` for the rising factorial (a)_m = Gamma(a+m)/Gamma(a).

    Uses the product directly when a+m-1 hits a pole-free region issue, i.e.
    when a is a non-positive integer.
    """
    a = float(a)
    m = int(m)
    if m < 0:
        raise RieszDomainError("Pochhammer length must be non-negative")
    if m == 0:
        return 0.0, 1.0
    if a <= 0.0 and a == round(a):
        terms = a + np.arange(m)
        if np.any(terms == 0.0):
            return -math.inf, 0.0
        return float(np.sum(np.log(np.abs(terms)))), float(np.prod(np.sign(terms)))
    l1, s1 = log_gamma(a + m)
    l0, s0 = log_gamma(a)
    return l1 - l0, s1 * s0


def require_general(s: float) -> float:
    s = float(s)
    if not (abs(s) < 1.0) or s == 0.0:
        raise RieszDomainError(f"requires |s| < 1 and s != 0, got s={s}")
    return s


def check_quadrature_exponent(s: float) -> float:
    """Domain guard for quadrature-backed routines: |s| <= 0.99, warn above 0.95."""
    s = require_general(s)
    if abs(s) > S_CLAMP:
        raise RieszDomainError(
            f"|s|={abs(s)} exceeds {S_CLAMP}; quadrature accuracy is not guaranteed there"
        )
    if abs(s) > S_WARN:
        warnings.warn(
            f"|s|={abs(s)} > {S_WARN}: weight singularity degrades quadrature accuracy",
            RuntimeWarning,
            stacklevel=3,
        )
    return s


def gegenbauer(nu: float, n: int, x):
    """C_n^{(nu)}(x) by the forward three-term recurrence."""
    if not nu > -0.5:
        raise RieszDomainError(f"Gegenbauer order must exceed -1/2, got {nu}")
    n = int(n)
    if n < 0:
        raise RieszDomainError("degree must be non-negative")
    return gegenbauer_table(nu, n, x)[n]


def gegenbauer_table(nu: float, nmax: int, x) -> np.ndarray:
    """Rows C_0 .. C_nmax evaluated at ``x``; shape ``(nmax+1,) + shape(x)``."""
    if not nu > -0.5:
        raise RieszDomainError(f"Gegenbauer order must exceed -1/2, got {nu}")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 2.0 * nu * x
    for k in range(2, nmax + 1):
        out[k] = (2.0 * x * (k + nu - 1.0) * out[k - 1] - (k + 2.0 * nu - 2.0) * out[k - 2]) / k
    return out


def gegenbauer_at_one(s: float, n) -> np.ndarray:
    """C_n^{(s/2)}(1) = Gamma(n+s) / (n! Gamma(s))."""
    n = np.asarray(n, dtype=float)
    l1, s1 = log_gamma(n + s)
    l2, _ = log_gamma(n + 1.0)
    l3, s3 = log_gamma(s)
    return s1 * s3 * np.exp(l1 - l2 - l3)


def norm_h(s: float, n):
    """Squared norm h_n of C_n^{(s/2)} under the weight (1-x^2)^{(s-1)/2}."""
    s = require_general(s)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise RieszDomainError("degree must be non-negative")
    l_num, sg_num = log_gamma(n + s)
    l_fact, _ = log_gamma(n + 1.0)
    l_half, _ = log_gamma(s / 2.0)
    shift = n + s / 2.0
    logv = math.log(math.pi) + (1.0 - s) * math.log(2.0) + l_num - l_fact - np.log(np.abs(shift)) - 2.0 * l_half
    out = sg_num * np.sign(shift) * np.exp(logv)
    return out[()] if np.ndim(out) == 0 else out


def eigen_lambda(s: float, n):
    """Eigenvalue lambda_n of the weighted kernel |u-y|^{-s} on C_n^{(s/2)}."""
    s = require_general(s)
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise RieszDomainError("degree must be non-negative")
    l_num, sg_num = log_gamma(n + s)
    l_s, sg_s = log_gamma(s)
    l_fact, _ = log_gamma(n + 1.0)
    c = cos_half_pi(s)
    logv = math.log(math.pi) + l_num - l_s - l_fact - math.log(c)
    out = sg_num * sg_s * np.exp(logv)
    return out[()] if np.ndim(out) == 0 else out


def series_prefactor(s: float) -> float:
    """Gamma(s) cos(pi s/2) / (2^{s-1} Gamma(s/2)^2), times sgn(s).

    The product sgn(s) Gamma(s) is positive on (-1, 1) \\ {0}, and also on
    (-2, -1) once combined with the negative cosine there.
    """
    s = float(s)
    if s == 0.0 or s <= -2.0 or s >= 1.0 or s == -1.0:
        raise RieszDomainError(f"prefactor undefined at s={s}")
    l_s, sg_s = log_gamma(s)
    l_half, _ = log_gamma(s / 2.0)
    c = cos_half_pi(s)
    logv = l_s + math.log(abs(c)) - (s - 1.0) * math.log(2.0) - 2.0 * l_half
    return math.copysign(1.0, s) * sg_s * math.copysign(1.0, c) * math.exp(logv)


def h_over_lambda(s: float, n):
    """h_n / lambda_n via the simplified gamma form (no Gamma(n+s) involved)."""
    s = require_general(s)
    n = np.asarray(n, dtype=float)
    # series_prefactor carries sgn(s); strip it to get the bare ratio
    bare = math.copysign(1.0, s) * series_prefactor(s)
    out = bare / (n + s / 2.0)
    return out[()] if np.ndim(out) == 0 else out


def schrodinger_eigenvalue(s: float, n):
    """nu_n(s) = (s/2)^2 + n(n+s)."""
    n = np.asarray(n, dtype=float)
    out = (s / 2.0) ** 2 + n * (n + s)
    return out[()] if np.ndim(out) == 0 else out
