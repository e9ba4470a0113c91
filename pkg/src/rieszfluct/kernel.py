"""Kernel-level objects: the bilinear expansion of |u-y|^{-s}, density
responses to a one-body perturbation, the smeared density-density
correlation, the box-wall equilibrium density and the finite-difference
checks of the Calogero-Sutherland operator identities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .covariance import CovarianceEstimate, Method, ModelParameters, _truncated_sum
from .errors import RieszDomainError
from .expansion import LinearStatistic
from .quadrature import (
    DEFAULT_COEFF_ORDER,
    DEFAULT_SINGULAR_ORDER,
    gauss_jacobi,
    gauss_legendre,
    integrate_singular,
    jacobi_weight_integral,
)
from .special import (
    check_quadrature_exponent,
    eigen_lambda,
    gegenbauer,
    gegenbauer_table,
    norm_h,
    require_general,
    schrodinger_eigenvalue,
)

__all__ = [
    "Basis",
    "DensityResponse",
    "kernel_expansion_partial",
    "kernel_coefficients",
    "eigen_relation_residual",
    "structure_coefficients",
    "density_response_general",
    "density_response_log",
    "forward_response",
    "forward_response_log",
    "smoothed_covariance_via_structure",
    "equilibrium_density",
    "calogero_operator",
    "kernel_identity_residual",
    "schrodinger_eigen_check",
    "richardson_orders",
]


class Basis(str, enum.Enum):
    GEGENBAUER = "Gegenbauer"
    COSINE = "Cosine"


@dataclass(frozen=True)
class DensityResponse:
    """Linear density response; ``mode_coeffs[k]`` belongs to mode n = k + 1 (no n = 0 mode)."""

    s: float
    mode_coeffs: np.ndarray = field(repr=False)
    basis: Basis

    @property
    def nmax(self) -> int:
        return self.mode_coeffs.size

    def mode_sum(self, x):
        """Sum c_n C_n(x) (Gegenbauer) or sum c_n cos(n acos x) (cosine)."""
        x = np.asarray(x, dtype=float)
        if self.basis is Basis.GEGENBAUER:
            table = gegenbauer_table(self.s / 2.0, self.nmax, x)[1:]
        else:
            theta = np.arccos(np.clip(x, -1.0, 1.0))
            n = np.arange(1, self.nmax + 1)
            table = np.cos(np.multiply.outer(n, theta))
        return np.tensordot(self.mode_coeffs, table, axes=1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= 1.0):
            raise RieszDomainError("density response is defined on the open interval (-1, 1)")
        if self.basis is Basis.GEGENBAUER:
            sg = math.copysign(1.0, self.s)
            return -sg * (1.0 - x * x) ** ((self.s - 1.0) / 2.0) * self.mode_sum(x)
        return -2.0 / (math.pi**2 * np.sqrt(1.0 - x * x)) * self.mode_sum(x)

    def total_mass(self, order: int = DEFAULT_COEFF_ORDER) -> float:
        """Integral of the response over (-1, 1) by quadrature."""
        if self.basis is Basis.GEGENBAUER:
            a = (self.s - 1.0) / 2.0
            rule = gauss_jacobi(a, a, order)
            return -math.copysign(1.0, self.s) * float(np.dot(rule.weights, self.mode_sum(rule.nodes)))
        rule = gauss_jacobi(-0.5, -0.5, order)
        return -2.0 / math.pi**2 * float(np.dot(rule.weights, self.mode_sum(rule.nodes)))


def kernel_coefficients(s: float, nmax: int) -> np.ndarray:
    """lambda_n / h_n for n = 0..nmax."""
    n = np.arange(nmax + 1)
    return eigen_lambda(s, n) / norm_h(s, n)


def kernel_expansion_partial(u: float, y: float, s: float, nmax: int) -> float:
    """Partial sum of the bilinear Gegenbauer expansion of |u - y|^{-s}."""
    s = require_general(s)
    if abs(u) > 1 or abs(y) > 1:
        raise RieszDomainError("u and y must lie in [-1, 1]")
    if u == y:
        raise RieszDomainError("the expansion diverges on the diagonal u = y")
    nu = s / 2.0
    tab = gegenbauer_table(nu, nmax, np.array([u, y]))
    return float(np.sum(kernel_coefficients(s, nmax) * tab[:, 0] * tab[:, 1]))


def eigen_relation_residual(n: int, s: float, u_grid: Sequence[float], order: int = DEFAULT_SINGULAR_ORDER) -> float:
    """max_u |K[C_n](u) - lambda_n C_n(u)| / (|lambda_n| max|C_n|) over ``u_grid``."""
    s = check_quadrature_exponent(s)
    nu = s / 2.0
    u_grid = np.asarray(u_grid, dtype=float)
    lam = eigen_lambda(s, n)
    exact = lam * gegenbauer(nu, n, u_grid)
    got = np.array([integrate_singular(lambda y: gegenbauer(nu, n, y), u, s, order) for u in u_grid])
    scale = abs(lam) * max(np.max(np.abs(gegenbauer(nu, n, u_grid))), 1e-300)
    return float(np.max(np.abs(got - exact)) / scale)


def structure_coefficients(s: float, nmax: int) -> np.ndarray:
    """1/(h_n lambda_n) for n = 1..nmax; the smoothed density-density correlation's mode weights."""
    s = require_general(s)
    n = np.arange(1, nmax + 1)
    return 1.0 / (norm_h(s, n) * eigen_lambda(s, n))


def _weighted_projections(fn, s: float, nmax: int, order: Optional[int] = None) -> np.ndarray:
    """int (1-y^2)^{(s-1)/2} C_n(y) fn(y) dy for n = 0..nmax."""
    if order is None:
        order = max(DEFAULT_COEFF_ORDER, 4 * nmax)
    a = (s - 1.0) / 2.0
    rule = gauss_jacobi(a, a, order)
    table = gegenbauer_table(s / 2.0, nmax, rule.nodes)
    return table @ (rule.weights * np.asarray(fn(rule.nodes), dtype=float))


def density_response_general(u_fn: LinearStatistic, s: float, nmax: int = 64) -> DensityResponse:
    """Response to the one-body potential ``u_fn`` for the Riesz kernel, |s| < 1, s != 0."""
    s = check_quadrature_exponent(s)
    proj = _weighted_projections(u_fn, s, nmax)[1:]
    coeffs = structure_coefficients(s, nmax) * proj
    big = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if big > 0:
        coeffs = np.where(np.abs(coeffs) < 1e-15 * big, 0.0, coeffs)
    return DensityResponse(s, coeffs, Basis.GEGENBAUER)


def forward_response(response: DensityResponse, x, order: int = DEFAULT_SINGULAR_ORDER) -> np.ndarray:
    """-sgn(s) int |x - x'|^{-s} response(x') dx', evaluated by singular quadrature.

    Should reproduce the perturbing potential up to an additive constant.
    """
    if response.basis is not Basis.GEGENBAUER:
        raise RieszDomainError("forward_response needs a Gegenbauer-basis response")
    s = response.s
    # the weight (1-y^2)^{(s-1)/2} and the -sgn(s) factors are absorbed by integrate_singular
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([integrate_singular(response.mode_sum, xi, s, order) for xi in x])


def density_response_log(u_fn: LinearStatistic, nmax: int = 64, order: Optional[int] = None) -> DensityResponse:
    """Cosine-basis response for the logarithmic kernel: c_p = p int_0^pi u(cos t) cos(p t) dt."""
    if order is None:
        order = max(DEFAULT_COEFF_ORDER, 4 * nmax)
    rule = gauss_legendre(order)
    theta = 0.5 * math.pi * (rule.nodes + 1.0)
    w = 0.5 * math.pi * rule.weights
    p = np.arange(1, nmax + 1)
    integrals = np.cos(np.outer(p, theta)) @ (w * u_fn(np.cos(theta)))
    coeffs = p * integrals
    big = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if big > 0:
        coeffs = np.where(np.abs(coeffs) < 1e-15 * big, 0.0, coeffs)
    return DensityResponse(0.0, coeffs, Basis.COSINE)


def forward_response_log(response: DensityResponse, x, epsabs: float = 1e-12) -> np.ndarray:
    """int log|x - x'| response(x') dx' by adaptive quadrature in the angle variable.

    The log singularity at x' = x is handed to QUADPACK as a break point;
    this does not use the cosine expansion of the kernel.
    """
    if response.basis is not Basis.COSINE:
        raise RieszDomainError("forward_response_log needs a cosine-basis response")
    x = np.atleast_1d(np.asarray(x, dtype=float))

    def smooth(sig):
        # response(cos sig) * sin(sig), with the 1/sin cancelled analytically
        return -2.0 / math.pi**2 * float(response.mode_sum(math.cos(sig)))

    out = []
    for xi in x:
        th = math.acos(xi)
        val, _ = integrate.quad(
            lambda sig: math.log(abs(xi - math.cos(sig))) * smooth(sig),
            0.0, math.pi, points=[th], limit=400, epsabs=epsabs, epsrel=1e-12,
        )
        out.append(val)
    return np.array(out)


def smoothed_covariance_via_structure(
    f: LinearStatistic, g: LinearStatistic, params: ModelParameters, nmax: int = 64
) -> CovarianceEstimate:
    """Cov(F, G) from the double integral of f(x) g(y) against the smoothed correlation.

    The correlation is inserted mode by mode and each mode's double integral
    factorises into two weighted projections computed by quadrature; no
    monomial expansion is involved.
    """
    s = check_quadrature_exponent(params.s)
    pf = _weighted_projections(f, s, nmax)[1:]
    pg = _weighted_projections(g, s, nmax)[1:]
    w = math.copysign(1.0, s) / params.beta * structure_coefficients(s, nmax)
    terms = np.concatenate([[0.0], w * pf * pg])
    scale = np.max(np.abs(terms)) if terms.size else 0.0
    if scale > 0:
        terms = np.where(np.abs(terms) < 1e-15 * scale, 0.0, terms)
    value, bound, used, ok = _truncated_sum(terms)
    return CovarianceEstimate(value, Method.GEGENBAUER_SERIES, bound, used, ok)


def equilibrium_density(s: float, x):
    """Normalised box-wall density (1 - x^2)^{(s-1)/2} / (2^s B((s+1)/2, (s+1)/2))."""
    s = require_general(s)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise RieszDomainError("equilibrium density is defined on (-1, 1)")
    a = (s - 1.0) / 2.0
    z = jacobi_weight_integral(a, a)
    out = (1.0 - x * x) ** a / z
    return out[()] if out.ndim == 0 else out


# -- Calogero-Sutherland operator checks -------------------------------------

def _d2(fn, t: float, h: float) -> float:
    return (-fn(t + 2 * h) + 16 * fn(t + h) - 30 * fn(t) + 16 * fn(t - h) - fn(t - 2 * h)) / (12 * h * h)


def calogero_operator(fn, t: float, s: float, h: float) -> float:
    """-fn''(t) + (s/2)(s/2 - 1) fn(t) / sin^2 t with a five-point second difference."""
    return -_d2(fn, t, h) + (s / 2.0) * (s / 2.0 - 1.0) * fn(t) / math.sin(t) ** 2


def _kernel_fn(theta: float, phi: float, s: float) -> float:
    return (math.sin(theta) * math.sin(phi)) ** (s / 2.0) / abs(math.cos(theta) - math.cos(phi)) ** s


def kernel_identity_residual(theta: float, phi: float, s: float, h: float = 1e-3, relative: bool = True) -> float:
    """(L_theta - L_phi) K(theta, phi), which vanishes identically.

    With ``relative=True`` the residual is divided by the larger of the two
    operator terms.
    """
    require_general(s)
    if theta == phi:
        raise RieszDomainError("theta and phi must differ")
    margin = 10.0 * h
    for t in (theta, phi):
        if not margin < t < math.pi - margin:
            raise RieszDomainError(f"angle {t} within 10h of the boundary")
    if abs(math.cos(theta) - math.cos(phi)) < margin:
        raise RieszDomainError("points too close to the kernel singularity")
    lt = calogero_operator(lambda t: _kernel_fn(t, phi, s), theta, s, h)
    lp = calogero_operator(lambda p: _kernel_fn(theta, p, s), phi, s, h)
    res = lt - lp
    if relative:
        return res / max(abs(lt), abs(lp), 1e-300)
    return res


def schrodinger_eigen_check(n: int, s: float, theta_grid, h: float = 1e-3) -> float:
    """max |L psi_n - nu_n psi_n| / max|nu_n psi_n| for psi_n = sin^{s/2} C_n^{(s/2)}(cos)."""
    if not s > -1.0:
        raise RieszDomainError("eigenfunctions need s > -1")
    nu = s / 2.0
    theta_grid = np.asarray(theta_grid, dtype=float)
    margin = 10.0 * h
    if np.any(theta_grid <= margin) or np.any(theta_grid >= math.pi - margin):
        raise RieszDomainError("theta grid too close to the boundary")

    def psi(t):
        return math.sin(t) ** nu * float(gegenbauer(nu, n, math.cos(t)))

    ev = schrodinger_eigenvalue(s, n)
    res = np.array([calogero_operator(psi, t, s, h) - ev * psi(t) for t in theta_grid])
    scale = max(np.max(np.abs([ev * psi(t) for t in theta_grid])), np.max(np.abs([psi(t) for t in theta_grid])))
    return float(np.max(np.abs(res)) / scale)


def richardson_orders(residual_fn, h0: float, levels: int = 3) -> np.ndarray:
    """Observed convergence orders log2(r(h)/r(h/2)) along a halving ladder."""
    hs = h0 / 2.0 ** np.arange(levels)
    r = np.array([abs(residual_fn(h)) for h in hs])
    return np.log2(r[:-1] / r[1:])
