import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hcmu.classify import AngleSpec, Role, classify
from hcmu.curvature import (CurvatureDomainError, CurvatureParams, MetricModel, PoleEvaluationError, F_eval,
                            F_increment, F_invert, F_invert_gaps, K_increment, build_metric, chart_terms,
                            curvature_at, density_at, f_of, field_terms, football_k2, log_density_at,
                            log_density_terms, log_f_increment, potential, solve_football_params)
from hcmu.oneform import GaugeSpec, build_form, football_form, solve_saddle_form

P10 = CurvatureParams.conical(1.0, 0.0)


def f_direct(K, p):
    """The cubic (or cusp) right-hand side written out from its factors."""
    if p.is_cusp:
        return (K - p.mu) ** 2 * (-2 * p.mu - K) / 3
    return -(K - p.k1) * (K - p.k2) * (K + p.k1 + p.k2) / 3


def test_F_value_and_quadrature():
    assert F_eval(0.5, P10) == pytest.approx(-1.6479, abs=1e-4)
    for p in (P10, CurvatureParams.conical(2.0, -0.5), CurvatureParams.cusp(-1.0)):
        lo, hi = p.bounds
        a, b = lo + 0.2 * (hi - lo), lo + 0.7 * (hi - lo)
        val, _ = integrate.quad(lambda k: 1.0 / f_direct(k, p), a, b, epsabs=0, epsrel=1e-12)
        assert F_eval(b, p) - F_eval(a, p) == pytest.approx(val, rel=1e-10)


def test_F_monotone_and_domain():
    for p in (P10, CurvatureParams.cusp(-1.0)):
        lo, hi = p.bounds
        K = np.linspace(lo, hi, 1002)[1:-1]
        assert np.all(np.diff(F_eval(K, p)) > 0)
        with pytest.raises(CurvatureDomainError):
            F_eval(hi, p)
    cusp = CurvatureParams.cusp(-1.0)
    assert math.isfinite(F_eval(0.0, cusp))
    # logarithmic divergence at the top: each factor 1000 in the gap adds ln(1000)/3
    steps = np.diff(F_eval(2 - np.array([1e-3, 1e-6, 1e-9]), cusp))
    np.testing.assert_allclose(steps, math.log(1000) / 3, rtol=1e-3)


def test_F_invert_round_trip_and_tails():
    assert F_invert(F_eval(0.5, P10), P10) == pytest.approx(0.5, abs=1e-10)
    # F ~ 3 ln(K - K2) at the bottom for (1, 0), so the gap is exp(u/3), not below 1e-8
    K, ln_eps, ln_delta, delta = F_invert_gaps(-50.0, P10)
    assert delta == pytest.approx(math.exp(-50 / 3), rel=1e-6)
    assert 1 - F_invert(50.0, P10) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.0, 1.0), st.integers(0, 2**31))
def test_round_trip_random_conical(k1, frac, seed):
    k2 = k1 * (-0.49 + 1.48 * frac)  # inside (-K1/2, K1)
    p = CurvatureParams.conical(k1, k2)
    rng = np.random.default_rng(seed)
    K = k2 + (k1 - k2) * rng.uniform(0.001, 0.999, 1000)
    np.testing.assert_allclose(F_invert(F_eval(K, p), p), K, atol=1e-10 * k1)


@pytest.mark.parametrize("mu", [-0.3, -0.7, -1.0, -2.0, -5.0])
def test_round_trip_cusp(mu):
    p = CurvatureParams.cusp(mu)
    rng = np.random.default_rng(1)
    K = mu + 3 * abs(mu) * rng.uniform(0.001, 0.999, 1000)
    np.testing.assert_allclose(F_invert(F_eval(K, p), p), K, atol=1e-10 * abs(mu))


@settings(max_examples=50, deadline=None)
@given(st.floats(-40, 40), st.floats(-40, 40))
def test_inverse_monotone(u1, u2):
    if u1 < u2:
        assert F_invert(u1, P10) <= F_invert(u2, P10)


@pytest.mark.parametrize("params", [P10, CurvatureParams.conical(2.0, -0.7), CurvatureParams.cusp(-1.0)])
def test_increments(params):
    lo, hi = params.bounds
    K = lo + (hi - lo) * np.linspace(0.05, 0.95, 7)
    d = (hi - lo) * np.array([1e-2, -3e-2, 2e-3, 1e-2, -1e-2, 4e-3, -2e-2])
    np.testing.assert_allclose(F_increment(K, d, params), F_eval(K + d, params) - F_eval(K, params), atol=1e-13)
    np.testing.assert_allclose(log_f_increment(K, d, params), np.log(f_of(K + d, params) / f_of(K, params)),
                               atol=1e-13)
    # tiny steps: first-order behaviour with full relative accuracy
    t = 1e-12 * (hi - lo)
    assert F_increment(K, t, params) == pytest.approx(t / f_of(K, params), rel=1e-9)
    np.testing.assert_allclose(K_increment(K, F_increment(K, d, params), params), d, rtol=1e-13)
    np.testing.assert_allclose(K_increment(K, F_increment(K, d * 1e-9, params), params), d * 1e-9, rtol=1e-13)


def test_invalid_params():
    with pytest.raises(CurvatureDomainError):
        CurvatureParams.conical(1.0, -0.6)
    with pytest.raises(CurvatureDomainError):
        CurvatureParams.cusp(0.5)


def fixture_form():
    p = [p for p in classify(AngleSpec(2.0)) if p.i1 == 2][0]
    return solve_saddle_form(p, gauge=GaugeSpec(-1, 2))


def test_potential_examples():
    f = football_form(2.0, -0.5)
    z = np.array([0.3 + 0.1j, -2.0, 1j])
    np.testing.assert_allclose(potential(z, f), 2 * np.log(np.abs(z)), atol=1e-14)
    m = fixture_form()
    s = m.sigma
    Z = (np.linspace(-2, 2, 9)[:, None] + 1j * np.linspace(-2, 2, 9)[None, :] + 0.013j).ravel()
    P = np.polynomial.polynomial.polyval(Z, m.p_coeffs)
    Q = np.polynomial.polynomial.polyval(Z, m.q_coeffs)
    np.testing.assert_allclose(potential(Z, m), 2 * s * (np.log(np.abs(P)) - 2 * np.log(np.abs(Q))), atol=1e-12)
    with pytest.raises(PoleEvaluationError):
        potential(m.pole_locations[0], m)


def test_potential_gradient_matches_form():
    """d phi = omega + conj(omega): phi_x = 2 Re w, phi_y = -2 Im w."""
    m = fixture_form()
    z, h = 0.4 + 0.7j, 1e-6
    px = (potential(z + h, m) - potential(z - h, m)) / (2 * h)
    py = (potential(z + 1j * h, m) - potential(z - 1j * h, m)) / (2 * h)
    w = m.w(z)
    assert px == pytest.approx(2 * w.real, rel=1e-7)
    assert py == pytest.approx(-2 * w.imag, rel=1e-7)


def test_potential_single_valued():
    m = fixture_form()
    for p in m.pole_locations:
        t = np.linspace(0, 2 * np.pi, 17)
        vals = potential(p + 0.05 * np.exp(1j * t), m)
        assert abs(vals[0] - vals[-1]) < 1e-12


def test_football_symmetry_and_limits():
    f = football_form(2.0, -0.5)
    model = build_metric(f, CurvatureParams.conical(1.0, 0.0))
    assert curvature_at(model.base_point, model) == pytest.approx(model.base_value, abs=1e-14)
    t = np.linspace(0, 2 * np.pi, 64)
    for r in (0.1, 0.5, 2.0):
        K = curvature_at(r * np.exp(1j * t), model)
        rho = density_at(r * np.exp(1j * t), model)
        assert np.ptp(K) < 1e-12 and np.ptp(rho) / rho.mean() < 1e-12
    near = curvature_at(np.array([1e-3, 1e-6]), model)
    assert near[1] < near[0] < 0.5  # minimum side at 0


def test_density_positive_and_slope():
    model = build_metric(build_form(classify(AngleSpec(0.5))[0]))
    X = np.linspace(-2, 2, 41)[:, None] + 1j * np.linspace(-2, 2, 41)[None, :] + 0.01
    assert np.all(density_at(X, model) > 0)
    r = 1e-4 * 2.0 ** np.arange(6)
    slope = np.polyfit(np.log(r), log_density_at(r.astype(complex), model), 1)[0]
    assert slope == pytest.approx(2 * (0.5 - 1), abs=1e-3)


def test_football_params():
    assert football_k2(2.0) == pytest.approx(0.0)
    assert football_k2(3.0) == pytest.approx(-0.2)
    sol = solve_football_params(2.0, 6 * math.pi)
    assert sol.params.k1 == pytest.approx(2.0, rel=1e-8)
    assert sol.area == pytest.approx(6 * math.pi)
    with pytest.warns(RuntimeWarning):
        near = solve_football_params(1.0 + 1e-8, 1.0)
    assert near.near_csc and near.params.k2 / near.params.k1 > 0.99


def test_chart_terms_match_direct_evaluation():
    model = build_metric(fixture_form())
    z = np.array([0.3 + 0.4j, -2.1 + 0.5j, 1.7j])
    for chart in (1, 2):
        terms = chart_terms(model.form, chart)
        K, lr = log_density_terms(model, terms, z)
        np.testing.assert_allclose(K, curvature_at(z, model, chart), atol=1e-12)
        np.testing.assert_allclose(lr, log_density_at(z, model, chart), atol=1e-10)
        _, phi, _, _ = field_terms(model, terms, z)
        np.testing.assert_allclose(phi, potential(z, model.form, chart), atol=1e-10)


def test_charts_agree_as_metrics():
    model = build_metric(fixture_form())
    z = np.array([0.8 + 0.9j, -1.5 - 0.2j])
    u = 1 / z
    assert np.allclose(curvature_at(z, model, 1), curvature_at(u, model, 2), atol=1e-12)
    # rho_z |dz|^2 = rho_u |du|^2 with |du/dz| = 1/|z|^2
    assert np.allclose(density_at(z, model, 1), density_at(u, model, 2) / np.abs(z) ** 4, rtol=1e-10)


def test_homothety_and_json():
    model = build_metric(fixture_form())
    s = model.scaled(2.0)
    assert s.params.k1 == pytest.approx(2 * model.params.k1)
    assert s.params.lam == pytest.approx(model.params.lam)
    z = 0.3 + 0.2j
    assert curvature_at(z, s) == pytest.approx(2 * curvature_at(z, model), rel=1e-10)
    assert density_at(z, s) == pytest.approx(density_at(z, model) / 2, rel=1e-10)
    back = MetricModel.from_json(json.loads(json.dumps(model.to_json())))
    assert back.to_json() == model.to_json()
    assert curvature_at(z, back) == curvature_at(z, model)


def test_cusp_metric():
    p = [p for p in classify(AngleSpec(2.0, 0.0)) if p.role1 == Role.SADDLE][0]
    model = build_metric(build_form(p))
    lo, hi = model.params.bounds
    K = curvature_at(np.array([0.5 + 0.5j, 2.0, -3j]), model)
    assert np.all((K > lo) & (K < hi))
