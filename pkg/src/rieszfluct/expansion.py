"""Linear statistics and their expansion coefficients.

A statistic is either a polynomial (monomial coefficients) or an arbitrary
vectorised callable. Polynomials are expanded in the Gegenbauer basis
exactly; callables go through Gauss-Jacobi quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly

from .errors import NonFiniteError, RieszDomainError
from .quadrature import DEFAULT_COEFF_ORDER, gauss_jacobi, gauss_legendre
from .special import (
    check_quadrature_exponent,
    gegenbauer_table,
    log_gamma,
    log_pochhammer,
    norm_h,
)

__all__ = [
    "LinearStatistic",
    "GegenbauerCoefficients",
    "CosineCoefficients",
    "parse_statistic",
    "monomial_gegenbauer_expansion",
    "gegenbauer_coeffs",
    "cosine_coeffs",
    "DEFAULT_NMAX",
]

DEFAULT_NMAX = 64
FLUSH_RELATIVE = 1e-15


@dataclass(frozen=True)
class LinearStatistic:
    """A real function f on [-1, 1]; the linear statistic is sum_j f(x_j)."""

    poly: Optional[tuple] = None
    func: Optional[Callable] = None
    label: str = ""

    def __post_init__(self):
        if (self.poly is None) == (self.func is None):
            raise ValueError("give exactly one of poly= or func=")
        if self.poly is not None:
            coeffs = tuple(float(c) for c in self.poly)
            if not coeffs:
                coeffs = (0.0,)
            if not all(math.isfinite(c) for c in coeffs):
                raise NonFiniteError("polynomial coefficients must be finite")
            object.__setattr__(self, "poly", coeffs)

    @classmethod
    def polynomial(cls, coeffs, label: str = "") -> "LinearStatistic":
        return cls(poly=tuple(coeffs), label=label or "poly:" + ",".join(repr(float(c)) for c in coeffs))

    @classmethod
    def power(cls, p: int) -> "LinearStatistic":
        if p < 0:
            raise RieszDomainError("power must be non-negative")
        return cls(poly=(0.0,) * p + (1.0,), label=f"pow:{p}")

    @classmethod
    def chebyshev(cls, k: int) -> "LinearStatistic":
        if k < 0:
            raise RieszDomainError("Chebyshev degree must be non-negative")
        coeffs = npcheb.cheb2poly([0.0] * k + [1.0])
        return cls(poly=tuple(coeffs), label=f"chebyshev:{k}")

    @classmethod
    def from_callable(cls, func: Callable, label: str = "callable") -> "LinearStatistic":
        return cls(func=func, label=label)

    @property
    def is_poly(self) -> bool:
        return self.poly is not None

    @property
    def degree(self) -> Optional[int]:
        if self.poly is None:
            return None
        nz = [i for i, c in enumerate(self.poly) if c != 0.0]
        return nz[-1] if nz else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.poly is not None:
            return nppoly.polyval(x, self.poly)
        vals = np.asarray(self.func(x), dtype=float)
        if vals.shape != x.shape:
            vals = np.broadcast_to(vals, x.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise NonFiniteError(f"statistic {self.label!r} returned a non-finite value")
        return vals

    def reflected(self) -> "LinearStatistic":
        """x -> f(-x)."""
        if self.poly is not None:
            return LinearStatistic(
                poly=tuple(c * (-1.0) ** i for i, c in enumerate(self.poly)), label=f"{self.label}(-x)"
            )
        f = self.func
        return LinearStatistic(func=lambda x: f(-np.asarray(x)), label=f"{self.label}(-x)")


@dataclass(frozen=True)
class GegenbauerCoefficients:
    """f_n^G for n = 0..nmax with respect to C_n^{(s/2)}."""

    s: float
    coeffs: np.ndarray = field(repr=False)

    @property
    def nmax(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, x):
        table = gegenbauer_table(self.s / 2.0, self.nmax, x)
        return np.tensordot(self.coeffs, table, axes=1)


@dataclass(frozen=True)
class CosineCoefficients:
    """f_n^c for n = 1..nmax; ``coeffs[0]`` is f_1^c."""

    coeffs: np.ndarray = field(repr=False)

    @property
    def nmax(self) -> int:
        return self.coeffs.size


def parse_statistic(spec: str) -> LinearStatistic:
    """Parse ``poly:a0,a1,...``, ``pow:p`` or ``chebyshev:k``."""
    kind, sep, body = spec.strip().partition(":")
    if not sep:
        raise RieszDomainError(f"statistic spec {spec!r} must look like kind:args")
    kind = kind.lower()
    try:
        if kind == "poly":
            coeffs = [float(c) for c in body.split(",") if c.strip()]
            if not coeffs:
                raise ValueError("empty coefficient list")
            return LinearStatistic(poly=tuple(coeffs), label=spec)
        if kind == "pow":
            return LinearStatistic.power(int(body))
        if kind in ("chebyshev", "cheb"):
            return LinearStatistic.chebyshev(int(body))
    except ValueError as exc:
        raise RieszDomainError(f"cannot parse statistic {spec!r}: {exc}") from exc
    raise RieszDomainError(f"unknown statistic kind {kind!r} (use poly, pow or chebyshev)")


def monomial_gegenbauer_expansion(p: int, nu: float) -> list[tuple[int, float]]:
    """Coefficients of x^p in the basis C_{p-2k}^{(nu)}, k = 0..floor(p/2).

    Each coefficient is (p!/2^p) (nu + p - 2k) / (k! (nu)_{p+1-k}).
    """
    p = int(p)
    if p < 0:
        raise RieszDomainError("power must be non-negative")
    if not nu > -0.5 or nu == 0.0:
        raise RieszDomainError(f"Gegenbauer order must satisfy nu > -1/2, nu != 0; got {nu}")
    lead = log_gamma(p + 1.0)[0] - p * math.log(2.0)
    out = []
    for k in range(p // 2 + 1):
        num = nu + p - 2 * k
        lp, sp = log_pochhammer(nu, p + 1 - k)
        lk = log_gamma(k + 1.0)[0]
        val = math.copysign(math.exp(lead + math.log(abs(num)) - lk - lp), num * sp)
        out.append((p - 2 * k, val))
    return out


def _flush(c: np.ndarray) -> np.ndarray:
    big = np.max(np.abs(c)) if c.size else 0.0
    if big > 0:
        c = np.where(np.abs(c) < FLUSH_RELATIVE * big, 0.0, c)
    return c


def gegenbauer_coeffs(
    f: LinearStatistic, s: float, nmax: Optional[int] = None, *, exact: bool = True, order: Optional[int] = None
) -> GegenbauerCoefficients:
    """Fourier-Gegenbauer coefficients f_n^G, n = 0..nmax.

    Polynomials use the exact monomial expansion unless ``exact=False``;
    everything else is projected with a Gauss-Jacobi rule of order
    max(128, 4*nmax, nmax + degree).
    """
    if not abs(s) < 1.0 or s == 0.0:
        raise RieszDomainError(f"requires |s| < 1 and s != 0, got s={s}")
    if nmax is None:
        nmax = max(DEFAULT_NMAX, f.degree or 0) if f.is_poly else DEFAULT_NMAX
    if nmax < 1:
        raise RieszDomainError("nmax must be at least 1")
    nu = s / 2.0
    coeffs = np.zeros(nmax + 1)
    if f.is_poly and exact:
        for p, a in enumerate(f.poly):
            if a == 0.0:
                continue
            for deg, c in monomial_gegenbauer_expansion(p, nu):
                if deg <= nmax:
                    coeffs[deg] += a * c
        return GegenbauerCoefficients(s, _flush(coeffs))

    check_quadrature_exponent(s)
    if order is None:
        order = max(DEFAULT_COEFF_ORDER, 4 * nmax, nmax + (f.degree or 0))
    a = 0.5 * (s - 1.0)
    rule = gauss_jacobi(a, a, order)
    table = gegenbauer_table(nu, nmax, rule.nodes)
    proj = table @ (rule.weights * f(rule.nodes))
    coeffs = proj / norm_h(s, np.arange(nmax + 1))
    return GegenbauerCoefficients(s, _flush(coeffs))


def cosine_coeffs(f: LinearStatistic, nmax: int = DEFAULT_NMAX, order: Optional[int] = None) -> CosineCoefficients:
    """f_n^c = (1/pi) int_0^pi f(cos t) cos(n t) dt for n = 1..nmax, Gauss-Legendre in t."""
    if nmax < 1:
        raise RieszDomainError("nmax must be at least 1")
    if order is None:
        order = max(DEFAULT_COEFF_ORDER, 4 * nmax)
    rule = gauss_legendre(order)
    theta = 0.5 * np.pi * (rule.nodes + 1.0)
    w = 0.5 * np.pi * rule.weights
    fv = f(np.cos(theta))
    n = np.arange(1, nmax + 1)
    coeffs = (np.cos(np.outer(n, theta)) @ (w * fv)) / np.pi
    return CosineCoefficients(_flush(coeffs))
