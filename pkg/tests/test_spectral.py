import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confsurf.analytic_core import RationalFn, ratfn_eval_periodic
from confsurf.errors import ContinuationUnreliable, ZeroModeError
from confsurf.spectral import (
    ComplexField,
    Grid,
    antideriv,
    dealias,
    deriv,
    eval_offaxis,
    hilbert,
    project_minus,
    project_plus,
    read_field_csv,
    validity_height,
    write_field_csv,
    write_spectrum_csv,
)
from conftest import pv_hilbert, ratfns

TWO_PI = 2 * math.pi
UNIT = Grid(64, TWO_PI)


def band_limited(seed: int, grid: Grid, kmax: int) -> ComplexField:
    rng = np.random.default_rng(seed)
    spec = np.zeros(grid.n_points, complex)
    sel = np.abs(grid.k) <= kmax
    spec[sel] = rng.normal(size=sel.sum()) + 1j * rng.normal(size=sel.sum())
    return ComplexField(grid, spectrum=spec)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(100, 1.0)
    with pytest.raises(ValueError):
        Grid(64, -1.0)


def test_samples_and_spectrum_agree():
    f = band_limited(1, Grid(128, 10.0), 40)
    g = ComplexField(f.grid, samples=f.samples.copy())
    assert np.allclose(g.spectrum, f.spectrum, rtol=0, atol=1e-12 * np.abs(f.spectrum).max())


def test_single_mode_spectrum_and_origin_phase():
    f = ComplexField.from_function(UNIT, lambda u: np.exp(-1j * u))
    k = UNIT.k
    assert abs(abs(f.spectrum[k == -1][0]) - 1) < 1e-14
    assert np.abs(f.spectrum[k != -1]).max() < 1e-14


# projector and Hilbert transform --------------------------------------------

def test_pminus_keeps_negative_mode():
    f = ComplexField.from_function(UNIT, lambda u: np.exp(-1j * UNIT.u))
    assert np.allclose(project_minus(f).samples, f.samples, atol=1e-14)


def test_pminus_splits_cosine():
    f = ComplexField.from_function(UNIT, np.cos)
    assert np.allclose(project_minus(f).samples, 0.5 * np.exp(-1j * UNIT.u), atol=1e-14)


def test_pminus_matches_rational_oracle():
    grid = Grid(1024, 64 * TWO_PI)
    f = RationalFn.pole(3j) + RationalFn.pole(-3j)
    got = project_minus(ComplexField.from_ratfn(grid, f)).samples
    ref = ComplexField.from_ratfn(grid, f.pminus()).samples
    mask = grid.interior()
    assert np.abs(got - ref)[mask].max() < 1e-9


def test_hilbert_twice_is_minus_identity_on_cosine():
    f = ComplexField.from_function(UNIT, np.cos)
    assert np.allclose(hilbert(hilbert(f)).samples, -f.samples, atol=1e-14)


def test_hilbert_kills_constant():
    assert np.abs(hilbert(ComplexField.constant(UNIT, 3.0)).samples).max() < 1e-15


def test_hilbert_matches_principal_value_quadrature():
    # long box: the periodic kernel differs from 1/(s - u) by O(u / L^2)
    grid = Grid(16384, 4000.0)
    f = ComplexField.from_function(grid, lambda u: 1 / (u**2 + 9))
    h = hilbert(f)
    idx = np.argmin(np.abs(grid.u[:, None] - np.linspace(-2, 2, 10)[None, :]), axis=0)
    for i in idx:
        x = grid.u[i]
        assert abs(h.samples[i] - pv_hilbert(lambda s: 1 / (s**2 + 9), x)) < 1e-6


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_projector_identities(seed):
    f = band_limited(seed, Grid(64, 7.0), 31)
    pm, pp = project_minus(f), project_plus(f)
    assert np.allclose((pm + pp).samples, f.samples, atol=1e-12)
    twice = project_minus(pm).spectrum
    once = pm.spectrum
    assert np.allclose(twice[1:], once[1:], atol=1e-13)
    assert abs(twice[0] - once[0] / 2) < 1e-13
    assert np.allclose(pm.samples, 0.5 * (f + 1j * hilbert(f)).samples, atol=1e-12)
    assert np.allclose(hilbert(hilbert(f)).samples, -(f - f.mean()).samples, atol=1e-12)


@given(ratfns(side=1.0))
@settings(max_examples=30)
def test_upper_pole_rationals_are_lower_analytic(f):
    grid = Grid(16384, 64 * TWO_PI)
    assert ComplexField.from_ratfn(grid, f).is_lower_analytic(1e-10)


# derivatives ----------------------------------------------------------------

def test_deriv_single_mode():
    f = ComplexField.from_function(UNIT, lambda u: np.exp(-1j * u))
    assert np.allclose(deriv(f).samples, -1j * f.samples, atol=1e-13)


def test_deriv_matches_rational_oracle():
    grid = Grid(1024, 64 * TWO_PI)
    f = RationalFn.pole(3j)
    got = deriv(ComplexField.from_ratfn(grid, f)).samples
    ref = ComplexField.from_ratfn(grid, f.derivative()).samples
    assert np.abs(got - ref)[grid.interior()].max() < 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_antideriv_inverts_deriv(seed):
    f = band_limited(seed, Grid(64, 5.0), 31)
    back = antideriv(deriv(f))
    assert np.allclose(back.samples, (f - f.mean()).samples, atol=1e-12)


def test_antideriv_rejects_mean():
    with pytest.raises(ZeroModeError):
        antideriv(ComplexField.constant(UNIT, 1.0))


# dealiasing -----------------------------------------------------------------

def test_dealias_keeps_band_limited():
    f = band_limited(3, Grid(96 // 3 * 2, 3.0), 10)
    assert np.allclose(dealias(f).samples, f.samples, atol=1e-14)


def test_dealias_removes_high_mode():
    grid = Grid(32, TWO_PI)
    f = ComplexField.from_function(grid, lambda u: np.exp(1j * (grid.n_points // 2 - 1) * u))
    assert np.abs(dealias(f).samples).max() < 1e-14


def test_dealias_product_exact_when_modes_fit():
    grid = Grid(32, TWO_PI)
    f, g = band_limited(4, grid, 5), band_limited(5, grid, 5)
    prod = f * g
    assert np.allclose(dealias(prod).samples, prod.samples, atol=1e-13)


# continuation ---------------------------------------------------------------

def test_offaxis_single_mode():
    f = ComplexField.from_function(UNIT, lambda u: np.exp(-1j * u))
    assert abs(eval_offaxis(f, 0.5j) - math.exp(0.5)) < 1e-12


def test_offaxis_below_pole():
    grid = Grid(2048, 64 * TWO_PI)
    f = RationalFn.pole(3j)
    field = ComplexField.from_ratfn(grid, f)
    ref = ratfn_eval_periodic(f, 1.5j, grid.length)
    assert abs(eval_offaxis(field, 1.5j) - ref) < 1e-7


def test_offaxis_refuses_near_pole():
    field = ComplexField.from_ratfn(Grid(), RationalFn.pole(3j))
    with pytest.raises(ContinuationUnreliable):
        eval_offaxis(field, 2.9j)


def test_offaxis_derivative():
    grid = Grid(2048, 64 * TWO_PI)
    f = RationalFn.pole(3j)
    field = ComplexField.from_ratfn(grid, f)
    ref = ratfn_eval_periodic(f.derivative(), 1.0j + 0.4, grid.length)
    assert abs(eval_offaxis(field, 1.0j + 0.4, order=1) - ref) < 1e-7


def test_lower_half_plane_always_valid():
    grid = Grid()
    f = RationalFn.pole(3j)
    field = ComplexField.from_ratfn(grid, f)
    w = np.array([-5j, 1 - 2j])
    assert np.allclose(eval_offaxis(field, w), ratfn_eval_periodic(f, w, grid.length), atol=1e-10)


def test_validity_height_below_singularity():
    grid = Grid(4096, 64 * TWO_PI)
    for d in (1.5, 3.0):
        h = validity_height(ComplexField.from_ratfn(grid, RationalFn.pole(1j * d)))
        assert 0.3 * d < h < d


def test_validity_height_shrinks_when_under_resolved():
    f = RationalFn.pole(1.0j)
    fine = validity_height(ComplexField.from_ratfn(Grid(4096, 64 * TWO_PI), f))
    coarse = validity_height(ComplexField.from_ratfn(Grid(256, 64 * TWO_PI), f))
    assert coarse < fine


# dumps ----------------------------------------------------------------------

def test_field_csv_round_trip(tmp_path):
    f = band_limited(7, Grid(64, 9.0), 20)
    write_field_csv(f, tmp_path / "f.csv")
    g = read_field_csv(tmp_path / "f.csv")
    assert g.grid.n_points == 64 and abs(g.grid.length - 9.0) < 1e-12
    assert np.array_equal(g.samples, f.samples)
    write_spectrum_csv(f, tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "k,re,im" and rows[1].startswith("-32,")
