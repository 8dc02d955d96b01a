import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confsurf.analytic_core import RationalFn
from confsurf.compressed_fluid import (
    LHParams,
    PoleFamilyParams,
    bifurcation_classify,
    brute_force_min_dxdu,
    dxdu,
    fields_from_samples,
    lh_bernoulli_residual,
    lh_eval,
    make_exact,
    pole_family_alpha,
    pole_family_shape,
    rejected_fields,
    residual_implicit,
    series_fields,
    series_next,
    threshold_bisect,
    write_shape_csv,
)
from confsurf.errors import NotIntegrableToRational, SingularTime
from conftest import ratfns

U = np.linspace(-20, 20, 401)


# compressing flow -----------------------------------------------------------

def test_lh_finite_difference_bernoulli_and_laplace():
    p = LHParams(t0=0.3)
    x, y, t, h = 0.7, -1.2, 2.0, 1e-4
    phi = lambda x, y, t: lh_eval(p, x, y, t)[0]
    phi_t = (phi(x, y, t + h) - phi(x, y, t - h)) / (2 * h)
    phi_x = (phi(x + h, y, t) - phi(x - h, y, t)) / (2 * h)
    phi_y = (phi(x, y + h, t) - phi(x, y - h, t)) / (2 * h)
    pressure = lh_eval(p, x, y, t)[1]
    assert abs(phi_t + 0.5 * (phi_x**2 + phi_y**2) + pressure) < 1e-7
    lap = (phi(x + h, y, t) + phi(x - h, y, t) + phi(x, y + h, t) + phi(x, y - h, t)
           - 4 * phi(x, y, t)) / h**2
    assert abs(lap) < 1e-5
    # the surface y = 0 carries zero pressure
    assert np.all(lh_eval(p, np.linspace(-3, 3, 7), 0.0, t)[1] == 0)


def test_lh_closed_form_residual_vanishes():
    x, y = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(-2, 0, 5))
    assert np.abs(lh_bernoulli_residual(LHParams(), x, y, 1.5)).max() < 1e-14


def test_lh_singular_time():
    with pytest.raises(SingularTime):
        lh_eval(LHParams(t0=1.0), 0.0, 0.0, 1.0)


# exact family ---------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(ratfns(min_terms=1, max_terms=3, max_order=3, side=1, constant=False))
def test_family_solves_implicit_equations(alpha):
    sol = make_exact(alpha)
    for t in (0.5, 1.0, 3.0):
        r = residual_implicit(sol.implicit_fields(U, t))
        scale = 1 + np.abs(sol.z_u(U, t)).max() ** 2 + np.abs(sol.phi_u(U, t)).max() ** 2
        assert max(r.res1, r.res2) < 1e-11 * scale


def test_potential_integrates_u_alpha_prime():
    # includes simple poles, which integrate to logarithms
    alpha = RationalFn.pole(1j, 0.5) + RationalFn.pole(2 + 1.5j, 0.2j, 2)
    sol = make_exact(alpha)
    assert sol.phi0_log
    h = 1e-5
    fd = (sol.phi0_value(U + h) - sol.phi0_value(U - h)) / (2 * h)
    assert np.abs(fd - U * alpha.derivative()(U)).max() < 1e-8


def test_family_against_finite_differences():
    alpha = RationalFn.pole(1.5j, 0.4) + RationalFn.pole(-1 + 2j, 0.3 - 0.2j, 2)
    sol = make_exact(alpha)
    u = np.linspace(-10, 10, 4001)
    du, dt, t = u[1] - u[0], 1e-3, 1.2
    times = t + dt * np.arange(-2, 3)
    f = fields_from_samples(times, [sol.z(u, s) for s in times],
                            [sol.phi(u, s) for s in times], du)
    r = residual_implicit(f, mask=slice(4, -4))
    assert max(r.res1, r.res2) < 1e-8


def test_rejected_potential_fails():
    alpha = RationalFn.pole(3j, 0.3)
    r = residual_implicit(rejected_fields(alpha, U, 1.0))
    assert max(r.res1, r.res2) > 1e-3


def test_make_exact_rejections():
    with pytest.raises(NotIntegrableToRational):
        make_exact(RationalFn.pole(1j, 1.0), allow_log=False)
    with pytest.raises(ValueError):
        make_exact(RationalFn.pole(-1j, 1.0))
    with pytest.raises(ValueError):
        make_exact(RationalFn.pole(1j, 1.0) + 2.0)
    # a double pole alone stays rational
    assert make_exact(RationalFn.pole(1j, 1.0, 2), allow_log=False).phi0_log == ()


# pole family ----------------------------------------------------------------

def test_shape_matches_direct_evaluation():
    p = PoleFamilyParams(1.3, 0.7)
    t = 2.0
    shape = pole_family_shape(p, t, U)
    z = U + pole_family_alpha(p)(U / t)  # z = u t + alpha(u) after u -> u/t
    assert np.abs(shape.x + 1j * shape.y - z).max() < 1e-14
    mirror = pole_family_shape(p, t, U, mirrored=True)
    assert np.allclose(mirror.y, -shape.y, atol=0)
    assert np.abs(mirror.x + 1j * mirror.y - U - pole_family_alpha(p, True)(U / t)).max() < 1e-14


def test_dxdu_against_gradient():
    p = PoleFamilyParams(-2.0, 0.4)
    u = np.linspace(-5, 5, 20001)
    x = pole_family_shape(p, 1.5, u).x
    assert np.abs(np.gradient(x, u)[1:-1] - dxdu(p, u, 1.5)[1:-1]).max() < 1e-5


def test_classification_examples():
    assert bifurcation_classify(PoleFamilyParams(1.0, 0.3)).cls == "bubbles"
    assert bifurcation_classify(PoleFamilyParams(-1.0, 0.3)).cls == "droplets"
    assert bifurcation_classify(PoleFamilyParams(1.0, 0.4)).cls == "one_valued"
    assert bifurcation_classify(PoleFamilyParams(0.0, 0.1)).cls == "one_valued"


def test_critical_points_are_folds():
    # the reported loci are exact folds where A t = 1
    p = PoleFamilyParams(2.0, 0.5)
    rep = bifurcation_classify(p, t_window=(0.5, 0.5), n_t=1)
    assert len(rep.critical_points) == 2
    for c in rep.critical_points:
        assert abs(dxdu(p, c["u"], c["t"])) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 5.0), st.booleans(), st.floats(0.02, 2.0))
def test_classification_agrees_with_brute_force(A, negative, ratio):
    A = -A if negative else A
    a = math.sqrt(ratio * A**2 / 8)
    if abs(ratio - 1) < 0.05:
        return
    rep = bifurcation_classify(PoleFamilyParams(A, a))
    folds = brute_force_min_dxdu(PoleFamilyParams(A, a), n_u=400, n_t=200) < 0
    assert (rep.cls != "one_valued") == folds


def test_threshold_by_bisection():
    A = 1.7
    decide = lambda p: brute_force_min_dxdu(p, n_u=200, n_t=200) < 0
    a_star = threshold_bisect(A, decide, 0.3, 0.9, tol=1e-8)
    assert abs(a_star - A / math.sqrt(8)) < 1e-6


def test_bisect_needs_a_flip():
    with pytest.raises(ValueError):
        threshold_bisect(1.0, lambda p: True, 0.1, 0.2)


# large-time series ----------------------------------------------------------

def _series_residual(alpha, z1, term, t):
    u = np.linspace(-3, 3, 121)
    u = u[np.abs(u) > 0.2]
    f = series_fields(alpha, z1, term.z2, u, t, term.origin_residue)
    r = residual_implicit(f)
    return max(r.res1, r.res2)


def test_series_derived_reading_is_third_order():
    alpha, z1 = RationalFn.pole(1j, 1.0), RationalFn.pole(2j, 1.0)
    term = series_next(alpha, z1)
    r = [_series_residual(alpha, z1, term, t) for t in (10.0, 20.0, 40.0)]
    assert 7 < r[0] / r[1] < 9 and 7 < r[1] / r[2] < 9


def test_series_literal_reading_flags_origin():
    alpha, z1 = RationalFn.pole(1j, 1.0), RationalFn.pole(2j, 1.0)
    term = series_next(alpha, z1, reading="literal")
    assert term.flagged and term.solvability > 0.1
    r = [_series_residual(alpha, z1, term, t) for t in (10.0, 20.0)]
    assert r[0] / r[1] < 5
    with pytest.raises(ValueError):
        series_next(alpha, z1, reading="other")


def test_shape_csv(tmp_path):
    shape = pole_family_shape(PoleFamilyParams(1.0, 1.0), 1.0, np.array([0.0, 1.0]))
    write_shape_csv(shape, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "u,x,y,t" and len(lines) == 3
    assert [float(v) for v in lines[1].split(",")] == [0.0, 0.0, -1.0, 1.0]
