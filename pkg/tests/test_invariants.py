import csv

import numpy as np
import pytest

from confsurf.analytic_core import RationalFn
from confsurf.dyachenko import DyachenkoState, SimConfig, integrate
from confsurf.errors import ContourThroughZero, LeftValidityRegion, NoConvergence
from confsurf.invariants import (
    ContourSpec,
    contour_IJ,
    find_zero,
    seeded_zero_ratfn,
    seeded_zero_state,
    track_zeros,
    write_track_csv,
    zero_constants,
)
from confsurf.spectral import ComplexField, Grid

TWO_PI = 2 * np.pi
GRID = Grid(1024, 16 * TWO_PI)
LAM, MU = 0.5 + 0.5j, 2.5j
V_POLE, V_COEF = 2j, -0.1j


def cot_image(c, p, L):
    """Symmetric periodic image of c/(w - p) and its derivative, in closed form."""
    f = lambda w: c * np.pi / L / np.tan(np.pi * (w - p) / L)
    df = lambda w: -c * (np.pi / L) ** 2 / np.sin(np.pi * (w - p) / L) ** 2
    return f, df


def exact_zero(lam, mu, L):
    # 1 + (c pi/L) cot(pi (w - mu)/L) = 0 with c = mu - lam
    c = mu - lam
    return mu + L / np.pi * np.arctan(-c * np.pi / L)


def seeded(grid=GRID, V=True):
    v = RationalFn.pole(V_POLE, V_COEF) if V else None
    return seeded_zero_state(grid, LAM, MU, v)


# zeros ----------------------------------------------------------------------

def test_zero_of_periodic_image():
    st = seeded()
    lam = find_zero(st.R, LAM + 0.05 - 0.03j)
    assert abs(lam - exact_zero(LAM, MU, GRID.length)) < 1e-9
    # the image shifts the zero only at second order in 1/L
    assert abs(lam - LAM) < 1e-2


def test_zero_constants_against_closed_form():
    st = seeded()
    L = GRID.length
    lam = exact_zero(LAM, MU, L)
    _, dR = cot_image(MU - LAM, MU, L)
    V, _ = cot_image(V_COEF, V_POLE, L)
    a, b = zero_constants(st.R, st.V, find_zero(st.R, LAM))
    assert abs(a - dR(lam)) < 1e-8 and abs(b - V(lam)) < 1e-8
    # on the line R' = 1/(lam - mu) at the zero
    assert abs(a - 1 / (LAM - MU)) < 1e-2


def test_newton_failures():
    st = seeded()
    with pytest.raises(ValueError):
        find_zero(st.R, 0.5 - 0.5j)
    flat = DyachenkoState.rest(GRID)
    with pytest.raises(NoConvergence):
        find_zero(flat.R, 0.5 + 0.5j)


def test_seed_validation():
    assert seeded_zero_ratfn(LAM, MU)(LAM) == pytest.approx(-1)
    with pytest.raises(ValueError):
        seeded_zero_ratfn(LAM, -1j)
    with pytest.raises(ValueError):
        ContourSpec(0.5j, 0.0)


# contour integrals ----------------------------------------------------------

def test_contour_integrals_are_residues():
    st = seeded()
    L = GRID.length
    lam = exact_zero(LAM, MU, L)
    _, dR = cot_image(MU - LAM, MU, L)
    V, _ = cot_image(V_COEF, V_POLE, L)
    for r in (0.2, 0.3):
        I, J = contour_IJ(st, ContourSpec(LAM, r))
        assert abs(I - TWO_PI * 1j / dR(lam)) < 1e-9 * abs(I)
        assert abs(J - TWO_PI * 1j * V(lam) / dR(lam)) < 1e-9 * abs(I)


def test_contour_without_zero_vanishes():
    I, J = contour_IJ(seeded(), ContourSpec(-1.0 + 0.5j, 0.3))
    assert abs(I) < 1e-12 and abs(J) < 1e-12


def test_contour_guards():
    st = seeded()
    with pytest.raises(LeftValidityRegion):
        contour_IJ(st, ContourSpec(2.0j, 0.3))
    lam = find_zero(st.R, LAM)
    with pytest.raises(ContourThroughZero):
        contour_IJ(st, ContourSpec(lam + 0.2, 0.2, n_nodes=256))


# dynamics -------------------------------------------------------------------

@pytest.fixture(scope="module")
def gravity_run():
    cfg = SimConfig(g=1.0, dt=1e-3, t_end=0.2, grid=GRID, stride=10)
    return integrate(seeded(), cfg)


def test_zero_laws_under_gravity(gravity_run):
    tracks, reports = track_zeros(gravity_run, [LAM], g=1.0)
    rep = reports[0]
    assert rep.max_dlam_plus_iU < 1e-5
    assert rep.max_dlam_plus_iU < 1e-3 * rep.max_dlam_minus_iU
    assert rep.max_a_drift < 1e-8
    assert rep.b_slope_rel_err_g < 1e-8 and rep.b_fit_residual < 1e-8
    assert len(tracks[0].times) == len(gravity_run.states)


def test_contour_laws_under_gravity(gravity_run):
    spec = ContourSpec(LAM, 0.25)
    IJ = np.array([contour_IJ(s, spec) for s in gravity_run.states])
    t = gravity_run.times
    scale = abs(IJ[0, 0])
    assert np.abs(IJ[:, 0] - IJ[0, 0]).max() < 1e-8 * scale
    assert np.abs(IJ[:, 1] - IJ[0, 1] + IJ[0, 0] * t).max() < 1e-7 * scale


def test_track_csv(tmp_path, gravity_run):
    tracks, _ = track_zeros(gravity_run, [LAM], g=1.0)
    write_track_csv(tracks[0], tmp_path / "z.csv")
    rows = list(csv.reader(open(tmp_path / "z.csv")))
    assert rows[0][:3] == ["t", "re_lambda", "im_lambda"]
    assert len(rows) == len(gravity_run.states) + 1
    assert rows[1][-1] == "nan" and float(rows[2][-1]) > 0
