"""Narrow-cut reduction of the R-V equations to the complex Hopf equation.

When ``R - 1`` and ``V`` are singular only on a short cut in the upper
half-plane, the projections in ``U`` and ``B`` are approximated by freezing
the conjugate fields at the cut:

    U ~ V_c R + R_c V - V_c,        B ~ V_c V.

In the frame ``chi = w - i int V_c dt`` with the clock ``dtau/dt = R_c`` the
equations become ``z_tau = i V z'`` and ``V_tau = i V V'``.  Starting from
``R = 1``, ``V = A/(lambda + i chi)`` the solution is explicit:

    s = sqrt(zeta^2 - 4 A tau),  zeta = lambda + i chi,
    V = 2A/(zeta + s),  z = chi + i tau V,  R = 2 s/(zeta + s).
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .analytic_core import RationalFn
from .dyachenko import DyachenkoState, SimConfig, compute_aux, integrate
from .errors import BranchAmbiguity, NonMonotone
from .spectral import ComplexField, Grid, eval_offaxis

CUT_TOL = 1e-12
REGIME_TOL = 0.05
DEFAULT_T_END = 1.0


@dataclass(frozen=True)
class NarrowCutParams:
    lam: float
    A: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def width(self) -> float:
        """Dimensionless cut width ``A / lambda^2``."""
        return self.A / self.lam**2

    @property
    def tau_collision(self) -> float:
        """Clock time at which the lower branch point reaches ``Im chi = 0``."""
        return math.inf if self.A <= 0 else self.lam**2 / (4 * self.A)

    def initial_V(self) -> RationalFn:
        # A/(lambda + i w) = -i A/(w - i lambda)
        return RationalFn.pole(1j * self.lam, -1j * self.A)


# explicit solution ----------------------------------------------------------

def hopf_sqrt(chi, tau, params: NarrowCutParams, track: bool = False):
    """``s = zeta sqrt(1 - 4 A tau / zeta^2)`` on the branch with ``s ~ zeta`` at infinity.

    With ``track=True`` the sign is made continuous along the order of
    ``chi``; otherwise a point on the cut raises :class:`BranchAmbiguity`.
    """
    zeta = params.lam + 1j * np.asarray(chi, dtype=complex)
    arg = 1 - 4 * params.A * np.asarray(tau) / np.where(zeta == 0, np.nan, zeta**2)
    arg = np.broadcast_to(arg, np.broadcast(zeta, arg).shape)
    on_cut = (arg.real < 0) & (np.abs(arg.imag) <= CUT_TOL * np.abs(arg))
    s = zeta * np.sqrt(arg)
    if not track:
        if np.any(on_cut):
            raise BranchAmbiguity("evaluation point lies on the square-root cut")
        return s
    flat = np.array(s, dtype=complex).ravel()
    for k in range(1, flat.size):
        if abs(flat[k] + flat[k - 1]) < abs(flat[k] - flat[k - 1]):
            flat[k] = -flat[k]
    return flat.reshape(np.shape(s))


def hopf_V(chi, tau, params: NarrowCutParams, track: bool = False):
    zeta = params.lam + 1j * np.asarray(chi, dtype=complex)
    return 2 * params.A / (zeta + hopf_sqrt(chi, tau, params, track))


def hopf_z(chi, tau, params: NarrowCutParams, track: bool = False):
    return np.asarray(chi, dtype=complex) + 1j * np.asarray(tau) * hopf_V(chi, tau, params, track)


def hopf_R(chi, tau, params: NarrowCutParams, track: bool = False):
    zeta = params.lam + 1j * np.asarray(chi, dtype=complex)
    s = hopf_sqrt(chi, tau, params, track)
    return 2 * s / (zeta + s)


def hopf_dV_dchi(chi, tau, params: NarrowCutParams, track: bool = False):
    """Closed-form ``dV/dchi = -i V / s``."""
    s = hopf_sqrt(chi, tau, params, track)
    return -1j * hopf_V(chi, tau, params, track) / s


def hopf_dz_dchi(chi, tau, params: NarrowCutParams, track: bool = False):
    return 1.0 / hopf_R(chi, tau, params, track)


def hopf_residual(params: NarrowCutParams, chi, taus):
    """Max residuals of ``z_tau = i V z'`` and ``V_tau = i V V'``.

    ``tau`` derivatives are second-order central differences on the uniform
    ``taus`` grid (interior points); ``chi`` derivatives are closed form.
    """
    chi = np.asarray(chi, dtype=float)
    taus = np.asarray(taus, dtype=float)
    h = taus[1] - taus[0]
    if not np.allclose(np.diff(taus), h):
        raise ValueError("taus must be uniform")
    tt = taus[:, None]
    V = hopf_V(chi[None, :], tt, params)
    z = hopf_z(chi[None, :], tt, params)
    V_tau = (V[2:] - V[:-2]) / (2 * h)
    z_tau = (z[2:] - z[:-2]) / (2 * h)
    Vi, ti = V[1:-1], tt[1:-1]
    res_V = V_tau - 1j * Vi * hopf_dV_dchi(chi[None, :], ti, params)
    res_z = z_tau - 1j * Vi * hopf_dz_dchi(chi[None, :], ti, params)
    return float(np.abs(res_z).max(initial=0.0)), float(np.abs(res_V).max(initial=0.0))


# approximate projections ----------------------------------------------------

def approx_aux(R: ComplexField, V: ComplexField, V_c: complex, R_c: complex):
    """Narrow-cut ``(U, B)`` and their max deviations from the exact projections."""
    U = V_c * R + V * R_c - V_c
    B = V * V_c
    U_ex, B_ex = compute_aux(R, V)
    dev_U = float(np.abs(U.samples - U_ex.samples).max())
    dev_B = float(np.abs(B.samples - B_ex.samples).max())
    return U, B, dev_U, dev_B


def cut_values(R: ComplexField, V: ComplexField, w_cut: complex) -> tuple[complex, complex]:
    """``(R_c, V_c)``: conjugate fields at the cut point ``w_cut`` (upper half-plane).

    ``conj(f)(w_cut) = conj(f(conj(w_cut)))`` and ``conj(w_cut)`` lies below the
    axis, where the continuation is always valid.
    """
    w = np.conj(w_cut)
    return (complex(np.conj(eval_offaxis(R, w))), complex(np.conj(eval_offaxis(V, w))))


# frame ----------------------------------------------------------------------

@dataclass
class FrameMap:
    t: np.ndarray
    tau: np.ndarray          # real clock
    shift: np.ndarray        # i int V_c dt, so chi = w - shift

    def tau_at(self, t):
        return np.interp(t, self.t, self.tau)

    def t_at(self, tau):
        return np.interp(tau, self.tau, self.t)

    def shift_at(self, t):
        return np.interp(t, self.t, self.shift.real) + 1j * np.interp(t, self.t, self.shift.imag)


def frame_build(t, R_c, V_c) -> FrameMap:
    """Trapezoid-rule clock ``tau = int R_c dt`` and shift ``i int V_c dt``."""
    t = np.asarray(t, dtype=float)
    R_c = np.asarray(R_c, dtype=complex)
    V_c = np.asarray(V_c, dtype=complex)
    if np.any(R_c.real <= 0):
        raise NonMonotone("Re R_c changes sign, the clock is not invertible")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must increase")
    tau = cumulative_trapezoid(R_c.real, t, initial=0.0)
    shift = 1j * cumulative_trapezoid(V_c, t, initial=0.0)
    return FrameMap(t, tau, shift)


# comparison with the full solver ---------------------------------------------

@dataclass
class CompareResult:
    width: float
    max_rel_err_V: float
    t_window: tuple
    out_of_regime: bool
    frame: FrameMap | None = None
    errors: np.ndarray | None = None


def _track_cut(grid: Grid, params: NarrowCutParams, config: SimConfig):
    """Run the solver while advancing the cut centroid ``dw_c/dt = i V_c``."""
    V0 = ComplexField.from_ratfn(grid, params.initial_V(), symmetric=True)
    state = DyachenkoState(ComplexField.constant(grid, 0.0), V0, 0.0)
    w_c = [1j * params.lam]
    R_c, V_c = [], []

    def sample(s):
        r, v = cut_values(s.R, s.V, w_c[-1])
        R_c.append(r)
        V_c.append(v)

    sample(state)

    def step(s):
        # trapezoid with the previous cut values as predictor
        w_pred = w_c[-1] + 1j * config.dt * V_c[-1]
        _, v_new = cut_values(s.R, s.V, w_pred)
        w_c.append(w_c[-1] + 0.5j * config.dt * (V_c[-1] + v_new))
        sample(s)

    traj = integrate(state, config, callback=step)
    times = state.t + config.dt * np.arange(len(R_c))
    return traj, times, np.array(R_c), np.array(V_c)


def compare_full(params: NarrowCutParams, t_end: float | None = None,
                 config: SimConfig | None = None, window: float = 4.0,
                 keep_frame: bool = False) -> CompareResult:
    """Max relative error of ``V`` on the axis between the solver and the Hopf solution.

    Errors are measured over ``|Re chi| <= window * lambda`` at every stored
    state and normalised by the peak of the explicit ``|V|``.  Without
    gravity the problem only depends on ``t A / lambda^2``, so widths are
    compared over a common window ``[0, t_end]``.
    """
    if t_end is None:
        t_end = DEFAULT_T_END
    if config is None:
        config = SimConfig(grid=Grid(8192, 800.0), dt=0.01, t_end=t_end, stride=5)
    else:
        config = SimConfig(g=0.0, dt=config.dt, t_end=t_end, grid=config.grid,
                           dealias=config.dealias, stride=config.stride,
                           cfl_factor=config.cfl_factor)
    if params.A == 0:
        return CompareResult(0.0, 0.0, (0.0, t_end), False)
    traj, times, R_c, V_c = _track_cut(config.grid, params, config)
    frame = frame_build(times, R_c, V_c)
    u = config.grid.u
    errs = []
    for st in traj.states:
        tau = float(frame.tau_at(st.t))
        chi = u - frame.shift_at(st.t)
        mask = np.abs(chi.real) <= window * params.lam
        exact = hopf_V(chi[mask], tau, params, track=True)
        errs.append(np.abs(st.V.samples[mask] - exact).max() / np.abs(exact).max())
    errs = np.array(errs)
    worst = float(errs.max())
    return CompareResult(params.width, worst, (0.0, t_end), worst > REGIME_TOL,
                         frame if keep_frame else None, errs)


def _compare_job(args):
    params, t_end, config = args
    return compare_full(params, t_end=t_end, config=config)


def convergence_table(lam: float, widths, t_end: float = DEFAULT_T_END,
                      config: SimConfig | None = None, workers: int = 1) -> list[CompareResult]:
    """``compare_full`` for each width ``A/lambda^2`` (optionally in parallel)."""
    jobs = [(NarrowCutParams(lam, w * lam**2), t_end, config) for w in widths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_compare_job, jobs))
    return [_compare_job(j) for j in jobs]


def write_convergence_csv(rows, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["width", "max_rel_err_V", "t_window"])
        for r in rows:
            writer.writerow([repr(r.width), repr(r.max_rel_err_V), f"{r.t_window[0]}:{r.t_window[1]}"])
