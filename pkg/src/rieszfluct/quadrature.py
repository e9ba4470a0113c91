"""Gauss-Jacobi rules and integration of kernels with an interior algebraic singularity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, NonFiniteError, RieszDomainError
from .special import log_gamma, require_general

__all__ = [
    "QuadratureRule",
    "gauss_jacobi",
    "gauss_legendre",
    "jacobi_weight_integral",
    "jacobi_moment",
    "integrate_weighted",
    "integrate_singular",
    "DEFAULT_COEFF_ORDER",
    "DEFAULT_SINGULAR_ORDER",
]

DEFAULT_COEFF_ORDER = 128
DEFAULT_SINGULAR_ORDER = 256


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for the weight (1-x)^alpha (1+x)^beta_exp on (-1, 1)."""

    alpha: float
    beta_exp: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return int(self.nodes.size)


def jacobi_weight_integral(alpha: float, beta_exp: float) -> float:
    """2^{a+b+1} B(a+1, b+1)."""
    la, _ = log_gamma(alpha + 1.0)
    lb, _ = log_gamma(beta_exp + 1.0)
    lab, _ = log_gamma(alpha + beta_exp + 2.0)
    return math.exp((alpha + beta_exp + 1.0) * math.log(2.0) + la + lb - lab)


def jacobi_moment(alpha: float, beta_exp: float, k: int) -> float:
    """Integral of x^k against the symmetric weight (alpha == beta_exp).

    Uses the Beta-function recursion m_{k+2} = m_k (k+1)/(k + 2 alpha + 3).
    """
    if alpha != beta_exp:
        raise RieszDomainError("moment recursion implemented for symmetric weights only")
    if k % 2:
        return 0.0
    m = jacobi_weight_integral(alpha, alpha)
    for j in range(0, k, 2):
        m *= (j + 1.0) / (j + 2.0 * alpha + 3.0)
    return m


def _recurrence(alpha: float, b: float, n: int):
    """Diagonal and off-diagonal of the Jacobi matrix for monic Jacobi polynomials."""
    k = np.arange(n, dtype=float)
    ab = alpha + b
    two = 2.0 * k + ab
    diag = np.empty(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag[:] = (b * b - alpha * alpha) / (two * (two + 2.0))
    diag[0] = (b - alpha) / (ab + 2.0)
    if alpha == b:
        diag[:] = 0.0
    k1 = np.arange(1, n, dtype=float)
    t = 2.0 * k1 + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4.0 * k1 * (k1 + alpha) * (k1 + b) * (k1 + ab) / (t * t * (t + 1.0) * (t - 1.0))
    if n > 1:
        # the k=1 entry has a removable 0/0 when a+b = -1
        off2[0] = 4.0 * (1.0 + alpha) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
    return diag, np.sqrt(off2)


@lru_cache(maxsize=256)
def gauss_jacobi(alpha: float, beta_exp: float, order: int) -> QuadratureRule:
    """Gauss-Jacobi rule via the Golub-Welsch eigenproblem.

    Exact for polynomials of degree <= 2*order - 1 against
    (1-x)^alpha (1+x)^beta_exp. Rules are cached and immutable.
    """
    alpha = float(alpha)
    beta_exp = float(beta_exp)
    order = int(order)
    if alpha <= -1.0 or beta_exp <= -1.0:
        raise RieszDomainError(f"Jacobi exponents must exceed -1, got ({alpha}, {beta_exp})")
    if order < 1:
        raise RieszDomainError("quadrature order must be at least 1")
    mu0 = jacobi_weight_integral(alpha, beta_exp)
    if order == 1:
        nodes = np.array([(beta_exp - alpha) / (alpha + beta_exp + 2.0)])
        weights = np.array([mu0])
    else:
        diag, off = _recurrence(alpha, beta_exp, order)
        try:
            nodes, vecs = eigh_tridiagonal(diag, off)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise ConvergenceError(
                f"Jacobi matrix eigensolver failed for alpha={alpha}, beta={beta_exp}, order={order}"
            ) from exc
        weights = mu0 * vecs[0, :] ** 2
        if alpha == beta_exp:
            nodes = 0.5 * (nodes - nodes[::-1])
            weights = 0.5 * (weights + weights[::-1])
    if not (np.all(np.diff(nodes) > 0) and np.all(np.abs(nodes) < 1) and np.all(weights > 0)):
        raise ConvergenceError(
            f"degenerate Gauss-Jacobi rule for alpha={alpha}, beta={beta_exp}, order={order}"
        )
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(alpha, beta_exp, nodes, weights)


def gauss_legendre(order: int) -> QuadratureRule:
    return gauss_jacobi(0.0, 0.0, order)


def _eval(f, x):
    vals = np.asarray(f(x), dtype=float)
    if vals.shape != np.shape(x):
        vals = np.broadcast_to(vals, np.shape(x))
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("integrand returned a non-finite value at a quadrature node")
    return vals


def integrate_weighted(f, rule: QuadratureRule) -> float:
    """Sum of w_i f(x_i); ``f`` must accept an array of nodes."""
    return float(np.dot(rule.weights, _eval(f, rule.nodes)))


def integrate_singular(f, u: float, s: float, order: int = DEFAULT_SINGULAR_ORDER) -> float:
    """Integral of (1-y^2)^{(s-1)/2} |u-y|^{-s} f(y) over (-1, 1).

    The interval is split at y = u and each piece is mapped to (-1, 1) with a
    Jacobi rule whose exponents carry the kernel (-s at the split point) and
    the endpoint weight ((s-1)/2). At u = +-1 the two factors merge into one
    endpoint exponent.
    """
    s = require_general(s)
    u = float(u)
    if not -1.0 <= u <= 1.0:
        raise RieszDomainError(f"evaluation point u={u} outside [-1, 1]")
    if order < 4:
        raise RieszDomainError("singular quadrature needs order >= 4")
    a = 0.5 * (s - 1.0)
    if u == 1.0:
        rule = gauss_jacobi(a - s, a, order)
        return integrate_weighted(f, rule)
    if u == -1.0:
        rule = gauss_jacobi(a, a - s, order)
        return integrate_weighted(f, rule)

    total = 0.0
    # left piece [-1, u]: (1+y) ~ (1+t), (u-y) ~ (1-t)
    half = 0.5 * (u + 1.0)
    rule = gauss_jacobi(-s, a, order)
    y = -1.0 + half * (1.0 + rule.nodes)
    smooth = (1.0 - y) ** a * _eval(f, y)
    total += half ** (1.0 - s + a) * float(np.dot(rule.weights, smooth))
    # right piece [u, 1]: (y-u) ~ (1+t), (1-y) ~ (1-t)
    half = 0.5 * (1.0 - u)
    rule = gauss_jacobi(a, -s, order)
    y = u + half * (1.0 + rule.nodes)
    smooth = (1.0 + y) ** a * _eval(f, y)
    total += half ** (1.0 - s + a) * float(np.dot(rule.weights, smooth))
    return total
