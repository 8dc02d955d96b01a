"""Method-of-lines integration of the Dyachenko equations for ``R = 1/z_w``
and the complex velocity ``V = i R Phi_w``.

    R_t = i (U R' - R U'),          U = P-(R conj(V) + conj(R) V)
    V_t = i (U V' - R B') + g (R - 1),   B = P-(V conj(V))

``R - 1`` and ``V`` are stored as lower-analytic fields on a periodic grid.

An optional *strain* ``gamma`` superposes the uniformly compressing flow
``V = i*gamma*u`` (the flat-surface exact solution) on the stored velocity.
The growing background terms are then carried analytically, so the
perturbation of a compressing fluid can be integrated on the same periodic
grid.  ``gamma`` obeys ``gamma' = -gamma**2``.  In strained mode the
perturbation ``R - 1`` must decay faster than ``1/u``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .analytic_core import RationalFn
from .errors import (
    AnalyticityLoss,
    Blowup,
    SecularDrift,
    StepRejected,
)
from .spectral import ComplexField, Grid, antideriv

log = logging.getLogger(__name__)

ANALYTICITY_TOL = 1e-8
BLOWUP_LIMIT = 1e6
MIN_ABS_R = 1e-12
CFL_FACTOR = 0.5
# the strain transport gamma*u*d/du has imaginary eigenvalues up to
# gamma*(L/2)*(2/3)*kappa_max; RK4 is stable below 2*sqrt(2) on that axis
STRAIN_CFL_FACTOR = 1.2


@dataclass(frozen=True)
class SurfaceShape:
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t: float = 0.0

    def to_rows(self):
        return [(u, x, y, self.t) for u, x, y in zip(self.u, self.x, self.y)]


@dataclass
class DyachenkoState:
    R1: ComplexField          # R - 1
    V: ComplexField
    t: float = 0.0
    strain: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.R1.grid

    @property
    def R(self) -> ComplexField:
        return self.R1 + 1.0

    @classmethod
    def rest(cls, grid: Grid, t: float = 0.0) -> "DyachenkoState":
        zero = ComplexField.constant(grid, 0.0)
        return cls(zero, zero.copy(), t)

    @classmethod
    def from_ratfn(cls, grid: Grid, r1: RationalFn, v: RationalFn, t: float = 0.0,
                   periodic: bool = True) -> "DyachenkoState":
        return cls(ComplexField.from_ratfn(grid, r1, periodic),
                   ComplexField.from_ratfn(grid, v, periodic), t)

    def copy(self) -> "DyachenkoState":
        return DyachenkoState(self.R1.copy(), self.V.copy(), self.t, self.strain)

    def validate(self, analyticity_tol: float = ANALYTICITY_TOL) -> None:
        R = self.R1.samples + 1.0
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(self.V.samples)):
            raise Blowup(f"non-finite values at t={self.t}")
        peak = max(np.abs(R).max(), np.abs(self.V.samples).max())
        if peak > BLOWUP_LIMIT:
            raise Blowup(f"field magnitude {peak:.3e} at t={self.t}")
        if np.abs(R).min() <= MIN_ABS_R:
            raise StepRejected(f"R vanishes on the axis at t={self.t}")
        if self.strain == 0.0:
            for name, f in (("R-1", self.R1), ("V", self.V)):
                content = f.positive_content()
                if content > analyticity_tol:
                    raise StepRejected(f"{name} has k>0 content {content:.2e} at t={self.t}")


@dataclass
class SimConfig:
    g: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    grid: Grid = field(default_factory=Grid)
    dealias: bool = True
    stride: int = 1
    cfl_factor: float = CFL_FACTOR


# spectral helpers on raw sample arrays --------------------------------------

class _Ops:
    def __init__(self, grid: Grid):
        self.grid = grid
        self.n = grid.n_points
        self.ik = 1j * grid.kappa
        self.neg = grid.k < 0
        self.pos = grid.k > 0
        self.keep = np.abs(grid.k) <= self.n / 3

    def fft(self, a):
        return np.fft.fft(a)

    def ifft(self, s):
        return np.fft.ifft(s)

    def d(self, a):
        return self.ifft(self.ik * self.fft(a))

    def pminus(self, a, dealias):
        s = self.fft(a)
        if dealias:
            s = s * self.keep
        out = np.where(self.neg, s, 0j)
        out[0] = s[0] / 2
        return self.ifft(out)

    def pminus_and_d(self, a, dealias):
        s = self.fft(a)
        if dealias:
            s = s * self.keep
        out = np.where(self.neg, s, 0j)
        out[0] = s[0] / 2
        return self.ifft(out), self.ifft(self.ik * out)

    def finish(self, a, dealias, name, check=True):
        s = self.fft(a)
        if dealias:
            s = s * self.keep
        top = np.abs(s).max()
        if check and top > 0:
            content = np.abs(s[self.pos]).max() / top
            if content > ANALYTICITY_TOL:
                raise AnalyticityLoss(f"{name} has k>0 content {content:.2e}")
        s[self.pos] = 0
        return self.ifft(s)


_OPS_CACHE: dict[Grid, _Ops] = {}


def _ops(grid: Grid) -> _Ops:
    ops = _OPS_CACHE.get(grid)
    if ops is None:
        ops = _OPS_CACHE[grid] = _Ops(grid)
    return ops


def _aux_arrays(ops, r1, v, gamma, dealias):
    """U, U', B' for the stored fields (plus the strain background)."""
    R = 1.0 + r1
    up, dup = ops.pminus_and_d(R * np.conj(v) + np.conj(R) * v, dealias)
    _, dbv = ops.pminus_and_d(v * np.conj(v), dealias)
    if gamma == 0.0:
        return up, dup, dbv, None
    s = ops.grid.u
    dr1 = ops.d(r1)
    U = -1j * gamma * s * r1 + up
    dU = -1j * gamma * (r1 + s * dr1) + dup
    return U, dU, dbv, dr1


def _rhs_arrays(ops, r1, v, gamma, g, dealias):
    R = 1.0 + r1
    U, dU, dbv, dr1 = _aux_arrays(ops, r1, v, gamma, dealias)
    if dr1 is None:
        dr1 = ops.d(r1)
    dv = ops.d(v)
    dR = 1j * (U * dr1 - R * dU)
    if gamma == 0.0:
        dV = 1j * (U * dv - R * dbv) + g * r1
        dR = ops.finish(dR, dealias, "dR/dt")
        dV = ops.finish(dV, dealias, "dV/dt")
        return dR, dV, 0.0
    s = ops.grid.u
    # growing i*gamma*u pieces of U V' - R B' cancel against gamma' = -gamma^2
    dV = 1j * (1j * gamma * U + U * dv - gamma**2 * s * r1
               - R * (-1j * gamma * (v + s * dv) + dbv)) + g * r1
    # the non-periodic coordinate leaves an O(tail) spike at the box edge, so
    # k>0 content is removed without the strict check
    dR = ops.finish(dR, dealias, "dR/dt", check=False)
    dV = ops.finish(dV, dealias, "dV/dt", check=False)
    return dR, dV, -gamma**2


def compute_aux(R: ComplexField, V: ComplexField, dealias: bool = False):
    """``U = P-(R conj V + conj R V)`` and ``B = P-(|V|^2)`` (no strain)."""
    ops = _ops(R.grid)
    U = ops.pminus(R.samples * np.conj(V.samples) + np.conj(R.samples) * V.samples, dealias)
    B = ops.pminus(np.abs(V.samples) ** 2 + 0j, dealias)
    return ComplexField(R.grid, samples=U), ComplexField(R.grid, samples=B)


def velocity_U(state: DyachenkoState, dealias: bool = False) -> ComplexField:
    """Full ``U`` including the strain background term."""
    ops = _ops(state.grid)
    U, _, _, _ = _aux_arrays(ops, state.R1.samples, state.V.samples, state.strain, dealias)
    return ComplexField(state.grid, samples=U)


def rhs(state: DyachenkoState, g: float = 0.0, dealias: bool = True):
    """Time derivatives ``(dR/dt, dV/dt)`` as fields."""
    ops = _ops(state.grid)
    dR, dV, _ = _rhs_arrays(ops, state.R1.samples, state.V.samples, state.strain, g, dealias)
    return ComplexField(state.grid, samples=dR), ComplexField(state.grid, samples=dV)


def cfl_limit(state: DyachenkoState, cfl_factor: float = CFL_FACTOR) -> float:
    ops = _ops(state.grid)
    U, _, _, _ = _aux_arrays(ops, state.R1.samples, state.V.samples, state.strain, False)
    grid = state.grid
    speed = np.max(np.abs(U) + np.abs(state.V.samples) + 1.0)
    cap = cfl_factor * grid.du / speed
    if state.strain != 0.0:
        cap = min(cap, STRAIN_CFL_FACTOR * grid.du / (abs(state.strain) * grid.length / 2))
    return cap


def step_rk4(state: DyachenkoState, config: SimConfig, check_cfl: bool = True,
             dt: float | None = None) -> DyachenkoState:
    """One classical Runge-Kutta step (``dt`` may be negative)."""
    dt = config.dt if dt is None else dt
    if check_cfl:
        cap = cfl_limit(state, config.cfl_factor)
        if abs(dt) > cap:
            raise StepRejected(f"|dt| = {abs(dt):.3e} exceeds CFL cap {cap:.3e}")
    ops = _ops(state.grid)
    g, dl = config.g, config.dealias
    r, v, gam = state.R1.samples, state.V.samples, state.strain

    k1 = _rhs_arrays(ops, r, v, gam, g, dl)
    k2 = _rhs_arrays(ops, r + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], gam + 0.5 * dt * k1[2], g, dl)
    k3 = _rhs_arrays(ops, r + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], gam + 0.5 * dt * k2[2], g, dl)
    k4 = _rhs_arrays(ops, r + dt * k3[0], v + dt * k3[1], gam + dt * k3[2], g, dl)

    w = dt / 6.0
    new = DyachenkoState(
        ComplexField(state.grid, samples=r + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])),
        ComplexField(state.grid, samples=v + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])),
        state.t + dt,
        gam + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )
    new.validate()
    return new


@dataclass
class Trajectory:
    states: list
    records: list

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def _record(state: DyachenkoState) -> dict:
    I_bar, J = conserved_line(state) if state.strain == 0.0 else (complex("nan"), complex("nan"))
    return {
        "t": state.t,
        "I_bar": [I_bar.real, I_bar.imag],
        "J": [J.real, J.imag],
        "min_abs_R": float(np.abs(state.R1.samples + 1.0).min()),
        "max_abs_V": float(np.abs(state.V.samples).max()),
    }


def integrate(state: DyachenkoState, config: SimConfig,
              callback: Callable[[DyachenkoState], None] | None = None) -> Trajectory:
    """Fixed-step RK4 from ``state.t`` to ``config.t_end``; keeps every ``stride``-th state."""
    n_steps = int(round((config.t_end - state.t) / config.dt))
    if n_steps < 0:
        raise ValueError("t_end lies before the initial time")
    t0 = state.t
    state.validate()
    states, records = [state], [_record(state)]
    current = state
    for i in range(1, n_steps + 1):
        current = step_rk4(current, config)
        current.t = t0 + i * config.dt  # avoid accumulated round-off in t
        if callback is not None:
            callback(current)
        if i % config.stride == 0 or i == n_steps:
            states.append(current)
            records.append(_record(current))
    return Trajectory(states, records)


def write_trajectory_jsonl(traj: Trajectory, path) -> None:
    with open(Path(path), "w") as fh:
        for rec in traj.records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def reconstruct_surface(state: DyachenkoState, strict: bool = True,
                        drift_tol: float = 1e-8) -> SurfaceShape:
    """Surface ``z = u + antiderivative(1/R - 1)`` sampled on the grid.

    The additive constant is fixed so that ``z - u`` has zero mean.
    """
    zu1 = 1.0 / state.R - 1.0
    mean = zu1.mean()
    if abs(mean) > drift_tol:
        if strict:
            raise SecularDrift(f"mean of 1/R - 1 is {mean:.3e}")
        log.warning("secular drift %.3e removed before reconstruction", abs(mean))
        zu1 = zu1 - mean
    else:
        zu1 = zu1 - mean
    zt = antideriv(zu1, zero_mode_tol=np.inf)
    u = state.grid.u
    z = u + zt.samples
    return SurfaceShape(u, z.real.copy(), z.imag.copy(), state.t)


def conserved_line(state: DyachenkoState) -> tuple[complex, complex]:
    """``(I_bar, J) = (int (1/R - 1) du, int V/R du)`` over the periodic box.

    Under the equations of motion ``I_bar`` is constant and
    ``dJ/dt = -g * I_bar``.
    """
    R = state.R1.samples + 1.0
    du = state.grid.du
    I_bar = complex(np.sum(1.0 / R - 1.0) * du)
    J = complex(np.sum(state.V.samples / R) * du)
    return I_bar, J
