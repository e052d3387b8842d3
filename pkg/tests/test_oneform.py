import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcmu.classify import AngleSpec, Role, classify, form_obstructed
from hcmu.oneform import (DegenerateSolutionError, GaugeSpec, OneFormModel, bounds_from_lambda, build_form,
                          cusp_football_form, cusp_saddle_form, cusp_single_form, football_form,
                          lambda_from_bounds, lambda_of, sigma_from_bounds, solve_saddle_form, verify_form)


def profile(alpha, beta=None, i1=None, i2=None, role2=None):
    ps = classify(AngleSpec(alpha, beta))
    ps = [p for p in ps if (i1 is None or p.i1 == i1) and (i2 is None or p.i2 == i2)
          and (role2 is None or p.role2 == role2) and Role.SADDLE in p.roles()]
    assert len(ps) == 1, ps
    return ps[0]


def test_fixture_alpha_two():
    m = solve_saddle_form(profile(2.0, i1=2, i2=1), gauge=GaugeSpec(-1, 2))
    np.testing.assert_allclose(m.p_coeffs, [2, 4, 1], atol=1e-10)
    np.testing.assert_allclose(m.q_coeffs, [1, 1], atol=1e-10)
    assert abs(m.c - (-2)) < 1e-10
    assert m.residual <= 1e-10


def _recurrence(alpha, b, c):
    """Monic P with P'(z - b) - alpha P = c z^(alpha-1), ascending coefficients."""
    u = np.zeros(alpha + 1, complex)
    u[alpha] = 1
    u[alpha - 1] = -c - alpha * b
    for k in range(alpha - 2, -1, -1):
        u[k] = b * (k + 1) * u[k + 1] / (k - alpha)
    return u


@pytest.mark.parametrize("alpha", [2, 3, 4, 5, 6])
def test_single_minimum_matches_recurrence(alpha):
    m = solve_saddle_form(profile(float(alpha), i1=alpha, i2=1))
    b = m.q_roots[0]
    np.testing.assert_allclose(m.p_coeffs, _recurrence(alpha, b, m.c), atol=1e-9)
    # the identity itself, checked in coefficient space
    lhs = np.polynomial.polynomial.polysub(
        np.polynomial.polynomial.polymul(np.polynomial.polynomial.polyder(m.p_coeffs), [-b, 1]), alpha * m.p_coeffs)
    rhs = np.zeros(alpha)
    rhs[alpha - 1] = 1
    np.testing.assert_allclose(lhs, m.c * rhs, atol=1e-9)


@pytest.mark.parametrize("args", [(2.0, None, 2, 1), (4.0, None, 4, 1), (3.0, 2.0, 3, 0), (3.0, 0.5, 2, 1)])
def test_linear_path_agrees_with_newton(args):
    a, b, i1, i2 = args
    p = [p for p in classify(AngleSpec(a, b)) if p.i1 == i1 and p.i2 == i2 and p.role1 == Role.SADDLE][0]
    lin = solve_saddle_form(p)
    newt = solve_saddle_form(p, force_newton=True)
    for g1, g2 in zip(lin.groups, newt.groups):
        np.testing.assert_allclose(np.polynomial.polynomial.polyfromroots(g1.roots),
                                   np.polynomial.polynomial.polyfromroots(g2.roots), atol=1e-8)
    assert abs(lin.c - newt.c) < 1e-8


def _sweep_profiles(max_total=7):
    vals = [0.5, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0]
    out = []
    for a in [2.0, 3.0, 4.0, 5.0, 6.0]:
        for b in [None] + vals:
            if b is not None and a + b > max_total:
                continue
            for p in classify(AngleSpec(a, b)):
                if p.n_saddles and not p.is_cusp:
                    out.append(p)
    return out


def test_sweep_residue_pattern():
    obstructed = 0
    for p in _sweep_profiles():
        if form_obstructed(p):
            with pytest.raises(DegenerateSolutionError):
                solve_saddle_form(p)
            obstructed += 1
            continue
        m = solve_saddle_form(p)
        assert m.residual <= 1e-10
        rep = verify_form(m)
        assert rep.passed, (p, rep)
        assert rep.residue_sum <= 1e-12
        if rep.ratio is not None:
            assert abs(rep.ratio - p.lam) <= 1e-8 * abs(p.lam)
    assert obstructed >= 1


def test_obstructed_profile_raises():
    p = profile(4.0, 0.5, i1=3, i2=1, role2=Role.MIN)
    assert form_obstructed(p)
    with pytest.raises(DegenerateSolutionError):
        solve_saddle_form(p)


def test_same_seed_same_output():
    p = profile(3.0, 2.0, i1=4, i2=1)
    a = solve_saddle_form(p, seed=5)
    b = solve_saddle_form(p, seed=5)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_gauge_is_respected():
    g = GaugeSpec(-1, 3)
    m = solve_saddle_form(profile(4.0, i1=3, i2=2), gauge=g)
    assert min(abs(np.array(m.q_roots) + 1)) < 1e-12
    assert abs((-1) ** len(m.p_roots) * m.p_coeffs[0] - 3) < 1e-9


def test_json_round_trip():
    m = build_form(profile(3.0, 0.5, i1=2, i2=1, role2=Role.MAX))
    d = json.loads(json.dumps(m.to_json()))
    m2 = OneFormModel.from_json(d)
    assert m2.to_json() == m.to_json()


def test_football_residues():
    f = football_form(2.0, -0.5)
    assert f.residues[0] == pytest.approx(1.0)
    assert f.residue_sum() == 0
    f = football_form(2.5, -0.3, beta=1.5)
    angles = sorted(a for _, a, _ in f.critical_points())
    assert angles == pytest.approx([1.5, 2.5])


def test_cusp_forms():
    for m in (cusp_single_form(-1.0), cusp_football_form(2.0, -0.7), cusp_saddle_form(3, -1.0)):
        assert abs(m.residue_sum()) < 1e-12
        assert m.regime == "cusp"
        assert verify_form(m).passed
    m = cusp_saddle_form(3, -1.0)
    kinds = sorted(k for _, _, k in m.critical_points())
    assert kinds == ["max", "max", "max", "min", "saddle"]


def test_parameter_helpers():
    k1, k2 = 1.0, -0.2
    lam = lambda_from_bounds(k1, k2)
    assert bounds_from_lambda(lam) == pytest.approx((k1, k2))
    assert sigma_from_bounds(k1, k2) == pytest.approx(3 * sigma_from_bounds(k1, k2, True))
    assert lambda_of(profile(4.0, i1=3, i2=2)) == pytest.approx(-1.5)
    assert math.isinf(lambda_of(classify(AngleSpec(2.0, 0.0))[0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.floats(0.1, 2.9).filter(lambda b: abs(b - round(b)) > 0.05), st.integers(0, 10**6))
def test_random_noninteger_profiles_solve(a, b, seed):
    for p in classify(AngleSpec(float(a), b)):
        if not p.n_saddles or form_obstructed(p):
            continue
        m = solve_saddle_form(p, seed=seed)
        rep = verify_form(m)
        assert rep.passed
        assert abs(m.residue_sum()) <= 1e-12 * max(1, np.max(np.abs(m.residues)))
