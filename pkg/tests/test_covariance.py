import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rieszfluct.covariance import (
    Method,
    ModelParameters,
    closed_form_centre_of_mass,
    closed_form_ls25_even,
    closed_form_power_sum,
    covariance,
    covariance_linear_potential,
    covariance_log_gas,
    covariance_series,
    large_p_asymptotic,
    linear_potential_power_sum,
    pair_potential_statistic_variance,
    series_terms,
    small_s_matching,
    telescoping_sum_lhs,
    telescoping_sum_rhs,
)
from rieszfluct.errors import RieszDomainError
from rieszfluct.expansion import LinearStatistic, cosine_coeffs, gegenbauer_coeffs


def P(s, beta=1.0, conjectural=False):
    return ModelParameters(beta, s, conjectural)


def test_model_parameters_validation():
    with pytest.raises(RieszDomainError):
        ModelParameters(0.0, 0.5)
    with pytest.raises(RieszDomainError):
        ModelParameters(1.0, 1.0)
    with pytest.raises(RieszDomainError):
        ModelParameters(1.0, -1.5)


def test_centre_of_mass_value():
    # 0.4315 at s = 1/2, beta = 1, straight from the gamma formula in mpmath
    s = mpmath.mpf(1) / 2
    ref = mpmath.cos(mpmath.pi * s / 2) * mpmath.gamma((s + 1) / 2) / (
        mpmath.sqrt(mpmath.pi) * (1 + s / 2) * mpmath.gamma(s / 2) * s**2
    )
    assert closed_form_centre_of_mass(P(0.5)) == pytest.approx(float(ref), rel=1e-14)
    assert closed_form_power_sum(1, P(0.5)).value == pytest.approx(0.43148208095, rel=1e-10)


def test_series_forms_agree():
    s = -0.4
    f = gegenbauer_coeffs(LinearStatistic.power(5), s)
    a = series_terms(f, f, P(s), "prefactored")
    b = series_terms(f, f, P(s), "norm-ratio")
    assert np.allclose(a, b, rtol=1e-12, atol=1e-16)


@pytest.mark.parametrize("s", [-0.9, -0.3, 0.2, 0.8])
@pytest.mark.parametrize("p", [1, 2, 3, 6])
def test_series_matches_closed_form(s, p):
    f = gegenbauer_coeffs(LinearStatistic.power(p), s)
    est = covariance_series(f, f, P(s, 2.0))
    assert est.method is Method.GEGENBAUER_SERIES and est.converged
    assert est.value == pytest.approx(closed_form_power_sum(p, P(s, 2.0)).value, rel=1e-12)


def test_odd_even_cross_covariance_vanishes():
    assert covariance(LinearStatistic.power(1), LinearStatistic.power(2), P(0.3)).value == 0.0


@given(st.floats(-0.95, 0.95).filter(lambda s: abs(s) > 1e-2), st.floats(0.1, 5.0))
@settings(max_examples=50, deadline=None)
def test_variance_positive_and_scales_with_beta(s, beta):
    f = LinearStatistic.polynomial([0.0, 1.0, 0.5, -0.3])
    v1 = covariance(f, f, P(s, 1.0)).value
    vb = covariance(f, f, P(s, beta)).value
    assert v1 > 0
    assert vb == pytest.approx(v1 / beta, rel=1e-12)


@given(
    st.lists(st.floats(-2, 2), min_size=2, max_size=5),
    st.lists(st.floats(-2, 2), min_size=2, max_size=5),
)
@settings(max_examples=40, deadline=None)
def test_covariance_symmetric_and_constant_blind(a, b):
    p = P(-0.35)
    f, g = LinearStatistic.polynomial(a), LinearStatistic.polynomial(b)
    fshift = LinearStatistic.polynomial([a[0] + 7.0] + list(a[1:]))
    cfg = covariance(f, g, p).value
    scale = 1 + abs(covariance(f, f, p).value) + abs(covariance(g, g, p).value)
    assert abs(cfg - covariance(g, f, p).value) <= 1e-12 * scale
    assert abs(cfg - covariance(fshift, g, p).value) <= 1e-12 * scale


def test_reflection_invariance():
    f = LinearStatistic.from_callable(lambda x: np.exp(x))
    g = LinearStatistic.from_callable(lambda x: np.sin(2 * x) + x * x)
    p = P(0.45)
    a = covariance(f, g, p, 40).value
    b = covariance(f.reflected(), g.reflected(), p, 40).value
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("p", [2, 4, 8, 12])
@pytest.mark.parametrize("s", [-0.6, 0.25, 0.9])
def test_ls25_even_form(p, s):
    assert closed_form_ls25_even(p, P(s)).value == pytest.approx(closed_form_power_sum(p, P(s)).value, rel=1e-12)


def test_ls25_rejects_odd():
    with pytest.raises(RieszDomainError):
        closed_form_ls25_even(3, P(0.5))


@pytest.mark.parametrize("p, n, s", [(5, 2, 0.7), (8, 3, -0.4), (1, 0, 0.5), (13, 6, -0.95)])
def test_telescoping(p, n, s):
    assert telescoping_sum_lhs(p, n, s) == pytest.approx(telescoping_sum_rhs(p, n, s), rel=1e-12)


def test_telescoping_domain():
    with pytest.raises(RieszDomainError):
        telescoping_sum_lhs(4, 2, 0.5)


def test_linear_potential_power_sums():
    for p in range(1, 8):
        est = covariance_linear_potential(LinearStatistic.power(p), LinearStatistic.power(p), 1.5)
        assert est.value == pytest.approx(linear_potential_power_sum(p, 1.5), rel=1e-13)
    assert linear_potential_power_sum(2, 1.0) == pytest.approx(4.0 / 3.0)


def test_linear_potential_callable_derivative():
    est = covariance_linear_potential(LinearStatistic.from_callable(np.sin), LinearStatistic.from_callable(np.sin), 1.0)
    # (1/2) int cos^2 = (1/2)(1 + sin(2)/2)
    assert est.value == pytest.approx(0.5 * (1 + math.sin(2.0) / 2), rel=1e-8)


def test_log_gas_chebyshev():
    # T_k has f_k^c = 1/2, so the variance is (2/beta) k / 4
    for k in (1, 3, 5):
        t = LinearStatistic.chebyshev(k)
        est = covariance_log_gas(cosine_coeffs(t), cosine_coeffs(t), 2.0)
        assert est.value == pytest.approx(k / 4.0, rel=1e-13)


def test_dispatch_by_regime():
    f = LinearStatistic.power(2)
    assert covariance(f, f, P(0.0)).method is Method.COSINE_SERIES
    assert covariance(f, f, P(-1.0)).method is Method.DERIVATIVE_INTEGRAL
    assert covariance(f, f, P(0.5)).method is Method.GEGENBAUER_SERIES
    with pytest.raises(RieszDomainError):
        covariance(f, f, P(-1.5, conjectural=True))


@pytest.mark.parametrize("p", [1, 2, 5])
def test_limit_towards_linear_potential(p):
    errs = [abs(closed_form_power_sum(p, P(-1 + e)).value - linear_potential_power_sum(p, 1.0)) for e in (1e-4, 1e-5)]
    assert 8 <= errs[0] / errs[1] <= 12


def test_conjectural_closed_form_flagged():
    est = closed_form_power_sum(2, P(-1.5, conjectural=True))
    assert est.conjectural and np.isfinite(est.value)


def test_small_s_matching():
    res = small_s_matching(LinearStatistic.power(1), LinearStatistic.power(1), 1.0)
    assert res.log_gas == pytest.approx(0.5, rel=1e-13)
    assert abs(res.plus - 0.5) < 1e-2 and abs(res.minus - 0.5) < 1e-2


def test_large_p_ratio():
    for s in (0.5, -0.5):
        r = closed_form_power_sum(200, P(s)).value / large_p_asymptotic(200, P(s))
        assert abs(r - 1) < 0.02
    assert large_p_asymptotic(400, P(0.5)) < large_p_asymptotic(100, P(0.5))
    assert large_p_asymptotic(400, P(-0.5)) > large_p_asymptotic(100, P(-0.5))


def test_large_p_near_linear_potential():
    p = 1000
    val = large_p_asymptotic(p, P(-1 + 1e-9))
    assert val == pytest.approx(p / 2.0, rel=1e-6)


def test_pair_potential_variance_verdicts():
    div = pair_potential_statistic_variance(0.0, P(0.5), 4096)
    conv = pair_potential_statistic_variance(0.0, P(-0.5), 4096)
    assert not div.converged
    assert conv.converged and conv.value > 0


def test_pair_potential_near_linear_potential():
    # as s -> -1 the statistic tends to -|x - y|, whose variance at y=0 is 1/beta
    est = pair_potential_statistic_variance(0.0, P(-1 + 1e-6), 4096)
    assert est.value == pytest.approx(1.0, rel=1e-3)
