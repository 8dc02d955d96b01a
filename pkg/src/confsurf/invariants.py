"""Zeros of ``R`` above the axis and the conservation laws attached to them.

At a zero ``lambda_n`` of ``R`` write ``R = a_n (w - lambda_n) + ...`` and
``V = b_n + ...``.  Differentiating ``R(lambda_n(t), t) = 0`` along the
R-V equations gives

    d lambda_n/dt = -i U(lambda_n),   d a_n/dt = 0,   d b_n/dt = -g.

The tracker measures the zero velocity against both signs of ``iU`` and the
``b_n`` slope against both ``-g`` and ``-g a_n``, so either convention can be
read off the report.  Contour integrals ``I = oint dw/R`` and
``J = oint V/R dw`` obey ``dI/dt = 0`` and ``dJ/dt = -g I``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic_core import RationalFn
from .dyachenko import DyachenkoState, Trajectory, velocity_U
from .errors import (
    ContinuationUnreliable,
    ContourThroughZero,
    LeftValidityRegion,
    NoConvergence,
    NumericalFailure,
    TrackLost,
)
from .spectral import ComplexField, Grid, eval_offaxis, validity_height

NEWTON_TOL = 1e-10
MAX_NEWTON = 50
MIN_CONTOUR_R = 1e-6


@dataclass
class ZeroTrack:
    times: list = field(default_factory=list)
    lambda_n: list = field(default_factory=list)
    a_n: list = field(default_factory=list)
    b_n: list = field(default_factory=list)
    U_at_zero: list = field(default_factory=list)

    def append(self, t, lam, a, b, U):
        self.times.append(float(t))
        self.lambda_n.append(complex(lam))
        self.a_n.append(complex(a))
        self.b_n.append(complex(b))
        self.U_at_zero.append(complex(U))

    def arrays(self):
        return (np.array(self.times), np.array(self.lambda_n), np.array(self.a_n),
                np.array(self.b_n), np.array(self.U_at_zero))


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    n_nodes: int = 256

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def nodes(self):
        theta = 2 * np.pi * np.arange(self.n_nodes) / self.n_nodes
        e = np.exp(1j * theta)
        return self.center + self.radius * e, 1j * self.radius * e * (2 * np.pi / self.n_nodes)


def _eval(f: ComplexField, w, order: int = 0):
    try:
        return eval_offaxis(f, w, order=order)
    except ContinuationUnreliable as exc:
        raise LeftValidityRegion(str(exc)) from exc


# zeros ----------------------------------------------------------------------

def find_zero(R: ComplexField, guess: complex, tol: float = NEWTON_TOL,
              max_iter: int = MAX_NEWTON) -> complex:
    """Newton iteration on the continuation of ``R`` above the axis.

    Converged when ``|R(w)| < tol * max|R|`` on the grid.
    """
    if guess.imag <= 0:
        raise ValueError("zeros are sought in the upper half-plane")
    scale = R.max_abs()
    w = complex(guess)
    for _ in range(max_iter):
        val = _eval(R, w)
        if abs(val) < tol * scale:
            return w
        slope = _eval(R, w, order=1)
        if slope == 0 or not np.isfinite(slope):
            break
        w = w - val / slope
        if not np.isfinite(w) or w.imag <= 0:
            break
    raise NoConvergence(f"Newton did not converge from {guess}")


def zero_constants(R: ComplexField, V: ComplexField, lam: complex) -> tuple[complex, complex]:
    """``a_n = R'(lambda)`` and ``b_n = V(lambda)``."""
    return complex(_eval(R, lam, order=1)), complex(_eval(V, lam))


@dataclass
class TrackReport:
    max_dlam_minus_iU: float      # |lambda' - i U|
    max_dlam_plus_iU: float       # |lambda' + i U|
    max_a_drift: float
    b_slope: complex
    b_fit_residual: float
    b_slope_rel_err_g: float      # against -g
    b_slope_rel_err_ga: float     # against -g a_n

    def to_dict(self) -> dict:
        return {k: (v if not isinstance(v, complex) else [v.real, v.imag])
                for k, v in self.__dict__.items()}


def _report(track: ZeroTrack, g: float) -> TrackReport:
    t, lam, a, b, U = track.arrays()
    if len(t) >= 3:
        dlam = (lam[2:] - lam[:-2]) / (t[2:] - t[:-2])
        Ui = U[1:-1]
        m_minus = float(np.abs(dlam - 1j * Ui).max())
        m_plus = float(np.abs(dlam + 1j * Ui).max())
    else:
        m_minus = m_plus = float("nan")
    drift = float(np.abs(a - a[0]).max())
    if len(t) >= 2:
        design = np.vstack([np.ones_like(t), t]).T
        coef, *_ = np.linalg.lstsq(design, b, rcond=None)
        slope = complex(coef[1])
        resid = float(np.abs(design @ coef - b).max())
    else:
        slope, resid = complex("nan"), float("nan")
    a0 = a[0]
    err_g = abs(slope + g) / max(abs(g), 1e-300) if g else abs(slope)
    err_ga = abs(slope + g * a0) / max(abs(g * a0), 1e-300) if g else abs(slope)
    return TrackReport(m_minus, m_plus, drift, slope, resid, float(err_g), float(err_ga))


def track_zeros(trajectory: Trajectory, guesses, g: float = 0.0):
    """Follow each zero through the stored states.

    Returns ``(tracks, reports)``.  Each Newton solve starts from the zero
    extrapolated linearly from the two previous states.
    """
    tracks, reports = [], []
    for guess in guesses:
        track = ZeroTrack()
        lam = complex(guess)
        for state in trajectory.states:
            if len(track.lambda_n) >= 2:
                lam = 2 * track.lambda_n[-1] - track.lambda_n[-2]
            try:
                lam = find_zero(state.R, lam)
                a, b = zero_constants(state.R, state.V, lam)
                U = complex(_eval(velocity_U(state), lam))
            except NumericalFailure as exc:
                last = track.times[-1] if track.times else None
                raise TrackLost(f"lost zero near {lam} at t={state.t}: {exc}", last) from exc
            track.append(state.t, lam, a, b, U)
        tracks.append(track)
        reports.append(_report(track, g))
    return tracks, reports


def write_track_csv(track: ZeroTrack, path) -> None:
    t, lam, a, b, U = track.arrays()
    mism = np.full(len(t), np.nan)
    if len(t) >= 3:
        dlam = (lam[2:] - lam[:-2]) / (t[2:] - t[:-2])
        mism[1:-1] = np.abs(dlam - 1j * U[1:-1])
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_lambda", "im_lambda", "re_a", "im_a", "re_b", "im_b", "dlam_minus_iU"])
        for i in range(len(t)):
            w.writerow([repr(float(x)) for x in (t[i], lam[i].real, lam[i].imag, a[i].real,
                                                 a[i].imag, b[i].real, b[i].imag, mism[i])])


# contour integrals ----------------------------------------------------------

def contour_IJ(state: DyachenkoState, contour: ContourSpec) -> tuple[complex, complex]:
    """Trapezoid rule for ``oint dw/R`` and ``oint V/R dw`` on a circle."""
    nodes, weights = contour.nodes()
    top = nodes.imag.max()
    for f in (state.R1, state.V):
        if top > validity_height(f):
            raise LeftValidityRegion(f"contour reaches Im w = {top:.3g} above the validity height")
    R = _eval(state.R, nodes)
    if np.abs(R).min() <= MIN_CONTOUR_R:
        raise ContourThroughZero("R vanishes on the contour")
    V = _eval(state.V, nodes)
    return complex(np.sum(weights / R)), complex(np.sum(weights * V / R))


# seeded states --------------------------------------------------------------

def seeded_zero_ratfn(lam: complex, mu: complex) -> RationalFn:
    """``R - 1`` for ``R = (w - lam)/(w - mu)``: a zero at ``lam``, a pole at ``mu``."""
    if mu.imag <= 0:
        raise ValueError("the pole must lie in the upper half-plane")
    return RationalFn.pole(mu, mu - lam)


def seeded_zero_state(grid: Grid, lam: complex, mu: complex,
                      V: RationalFn | None = None, t: float = 0.0) -> DyachenkoState:
    """Grid state with ``R = (w - lam)/(w - mu)``.

    The symmetric periodic image is used so that the zero stays at ``lam``
    up to ``O(1/L^2)``.
    """
    v = V if V is not None else RationalFn()
    return DyachenkoState(
        ComplexField.from_ratfn(grid, seeded_zero_ratfn(lam, mu), symmetric=True),
        ComplexField.from_ratfn(grid, v, symmetric=True), t)
