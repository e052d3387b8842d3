import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcmu.classify import AngleSpec, Role, classify
from hcmu.curvature import CurvatureParams, build_metric, football_area_numeric
from hcmu.oneform import build_form, football_form
from hcmu.validate import (LITERAL_ENERGY_CONSTANT, Thresholds, _bump, alpha_max, calibrate_energy_constant,
                           curvature_consistency, estimate_angle, expected_ratios, gauss_bonnet_check,
                           gauss_bonnet_rhs, integrate_density, integrate_moments, laplacian, singular_angles,
                           verify_model)


def model_for(alpha, beta=None, i1=None, i2=None, role2=None):
    ps = [p for p in classify(AngleSpec(alpha, beta))
          if (i1 is None or p.i1 == i1) and (i2 is None or p.i2 == i2) and (role2 is None or p.role2 == role2)]
    return build_metric(build_form(ps[0]))


def test_bump_is_smooth_cutoff():
    t = np.linspace(0, 1.5, 301)
    b = _bump(t)
    assert np.all(b[t <= 0.5] == 1) and np.all(b[t >= 1] == 0)
    assert np.all(np.diff(b) <= 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 6).filter(lambda a: abs(a - 1) > 1e-3), min_size=1, max_size=4))
def test_gauss_bonnet_rhs_formula(angles):
    assert gauss_bonnet_rhs(angles) == pytest.approx(2 * math.pi * (2 + sum(a - 1 for a in angles)))


def test_football_area_against_radial_quadrature():
    f = football_form(2.0, -0.5)
    m = build_metric(f, CurvatureParams.conical(1.0, 0.0))
    area = integrate_density(m, 0, tol=1e-6)
    assert area == pytest.approx(football_area_numeric(m.params, 2.0), rel=1e-5)
    with pytest.raises(ValueError):
        integrate_density(m, 0, tol=1e-8)


@pytest.mark.parametrize("args", [(2.0, None, 2, 1), (0.5, None, None, None), (2.0, 0.0, 2, 0), (3.0, 0.5, 2, 1)])
def test_gauss_bonnet(args):
    m = model_for(*args)
    lhs, rhs = gauss_bonnet_check(m)
    assert lhs == pytest.approx(rhs, rel=1e-3)


def test_energy_ratios_and_homothety():
    m = model_for(2.0, None, 2, 1)
    mom = integrate_moments(m, (0, 1, 2), 1e-5)
    for n, e in expected_ratios(m).items():
        assert mom.values[n] / mom.values[0] == pytest.approx(e, rel=1e-3)
    s = m.scaled(3.0)
    ms = integrate_moments(s, (0, 1), 1e-5)
    assert ms.values[0] == pytest.approx(mom.values[0] / 3, rel=1e-3)
    assert ms.values[1] == pytest.approx(mom.values[1], rel=1e-3)


def test_energy_constant_is_twelve_pi():
    models = [build_metric(football_form(2.0, -0.5), CurvatureParams.conical(1.0, 0.0)), model_for(2.0, None, 2, 1),
              model_for(3.0, 0.5, 2, 1, Role.MAX)]
    cal = calibrate_energy_constant(models)
    assert cal.constant == pytest.approx(12 * math.pi, rel=1e-3)
    assert cal.ratio_to_literal == pytest.approx(2 * math.pi, rel=1e-3)
    assert cal.constant / LITERAL_ENERGY_CONSTANT == cal.ratio_to_literal


def test_alpha_max_counts_smooth_maxima():
    assert alpha_max(model_for(2.0, None, 2, 1).form) == 2
    assert alpha_max(model_for(3.0, 0.5, 2, 1, Role.MAX).form) == pytest.approx(2.5)


@pytest.mark.parametrize("args,expected", [((0.5,), 0.5), ((0.2,), 0.2), ((3.5,), 3.5)])
def test_angle_at_football_point(args, expected):
    m = model_for(*args)
    loc = [s.loc for s in m.form.singular_points][0]
    assert estimate_angle(m, loc) == pytest.approx(expected, rel=1e-3)


def test_angles_at_saddle_and_smooth_points():
    m = model_for(4.0, None, 3, 2)
    for loc, expected, kind in m.form.critical_points():
        assert estimate_angle(m, loc) == pytest.approx(expected, rel=1e-3), kind


def test_singular_angles_cusp_counts_zero():
    m = model_for(2.0, 0.0, 2, 0)
    assert sorted(singular_angles(m)) == [0.0, 2.0]


def test_laplacian_stencils():
    n = 65
    xs = np.linspace(-1, 1, n)
    h = xs[1] - xs[0]
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    harmonic = X ** 3 - 3 * X * Y ** 2
    quad = X ** 2 + Y ** 2
    for st_ in ("isotropic", "plus"):
        assert np.max(np.abs(laplacian(harmonic, h, st_))) < 1e-9
        np.testing.assert_allclose(laplacian(quad, h, st_), 4.0, atol=1e-9)


def test_curvature_consistency_converges():
    m = model_for(2.0, None, 2, 1)
    e1 = curvature_consistency(m, 64)
    e2 = curvature_consistency(m, 127)
    assert e2 < e1 / 2.5


def test_curvature_consistency_near_high_order_saddle():
    """rho ~ 1e-15 next to the order-4 zero; the error must still fall ~4x per halving."""
    m = model_for(5.0, 2.0, 2, 3, Role.MAX)
    e1, e2 = curvature_consistency(m, 128), curvature_consistency(m, 255)
    assert e1 < 0.1
    assert 3.5 < e1 / e2 < 4.5


def test_verify_model_report():
    m = model_for(2.0, None, 2, 1)
    rep = verify_model(m, curvature_grid=128)
    assert rep.all_passed, rep.table()
    d = json.loads(json.dumps(rep.to_json(), default=float))
    assert d["all_passed"]
    assert "gauss-bonnet" in rep.table()


def test_verify_model_cusp_skips_angle():
    m = model_for(2.0, 0.0, 2, 0)
    rep = verify_model(m, curvature_grid=0)
    assert any("cusp" in why for why in rep.skipped.values())
    assert rep.all_passed


def test_thresholds_are_configurable():
    m = model_for(0.5)
    rep = verify_model(m, thresholds=Thresholds(gauss_bonnet_rel=0.0, quad_tol=1e-3), curvature_grid=0)
    assert rep.passed["gauss_bonnet"] is False or rep.gauss_bonnet_lhs == rep.gauss_bonnet_rhs
