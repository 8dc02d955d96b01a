"""Closed-form solutions around the uniformly compressing fluid.

The flat-surface flow ``Phi = (x^2 - y^2) / (2 (t - t0))`` with pressure
``P = -y^2/(t - t0)^2`` is a potential flow whose free surface ``y = 0``
stays flat.  In conformal variables (``t0 = 0``, time reversed) it reads
``z = t u``, ``Phi = t u^2 / 2``, and it admits an exact family of
perturbations

    z(u, t) = u t + alpha(u),    Phi(u, t) = u^2 t / 2 + Phi0(u),

with ``Phi0' = u alpha'`` and ``alpha`` any decaying function analytic in
the lower half-plane.  The module also covers the single-pole member with its
overturning threshold and the next terms of the large-time series.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .analytic_core import RationalFn, ratfn_divide_by_u
from .dyachenko import DyachenkoState, SimConfig, SurfaceShape, integrate
from .errors import NotIntegrableToRational, SingularTime
from .spectral import ComplexField, Grid, project_minus

SOLVABILITY_TOL = 1e-10
CLASSES = ("one_valued", "bubbles", "droplets")


# Longuet-Higgins flow -------------------------------------------------------

@dataclass(frozen=True)
class LHParams:
    t0: float = 0.0


def lh_eval(params: LHParams, x, y, t):
    """Potential and pressure of the compressing flow (vectorised in x, y)."""
    tau = t - params.t0
    if tau == 0:
        raise SingularTime(f"t = {t} coincides with the singular time")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi = 0.5 * (x**2 - y**2) / tau
    pressure = -y**2 / tau**2
    return phi, pressure


def lh_bernoulli_residual(params: LHParams, x, y, t):
    """``Phi_t + |grad Phi|^2 / 2 + P`` from the closed-form derivatives."""
    tau = t - params.t0
    phi_t = -0.5 * (np.asarray(x) ** 2 - np.asarray(y) ** 2) / tau**2
    grad2 = (np.asarray(x) ** 2 + np.asarray(y) ** 2) / tau**2
    _, pressure = lh_eval(params, x, y, t)
    return phi_t + 0.5 * grad2 + pressure


# exact perturbation family --------------------------------------------------

@dataclass(frozen=True)
class PerturbationSolution:
    """``z = u t + alpha``, ``Phi = u^2 t/2 + Phi0`` with ``Phi0' = u alpha'``.

    ``phi0`` is the rational part of ``Phi0``; simple poles of ``u alpha'``
    integrate to logarithms, kept in ``phi0_log`` as ``(pole, coeff)`` pairs
    meaning ``coeff * log(u - pole)``.
    """
    alpha_fn: RationalFn
    phi0: RationalFn
    phi0_log: tuple = ()

    @property
    def phi0_prime(self) -> RationalFn:
        return self.alpha_fn.derivative().times_u()

    def z(self, u, t):
        return np.asarray(u) * t + self.alpha_fn(u)

    def z_u(self, u, t):
        return t + self.alpha_fn.derivative()(u)

    def z_t(self, u, t):
        return np.asarray(u, dtype=complex)

    def phi0_value(self, u):
        u = np.asarray(u, dtype=float)
        out = self.phi0(u) + 0j
        for pole, coeff in self.phi0_log:
            out = out + coeff * np.log(u - pole)
        return out

    def phi(self, u, t):
        return 0.5 * np.asarray(u) ** 2 * t + self.phi0_value(u)

    def phi_u(self, u, t):
        return np.asarray(u) * t + self.phi0_prime(u)

    def phi_t(self, u, t):
        return 0.5 * np.asarray(u, dtype=complex) ** 2

    def implicit_fields(self, u, t) -> "ImplicitFields":
        u = np.asarray(u, dtype=float)
        return ImplicitFields(self.z_u(u, t), self.z_t(u, t), self.phi_u(u, t), self.phi_t(u, t))


def make_exact(alpha_fn: RationalFn, allow_log: bool = True) -> PerturbationSolution:
    """Build the exact family member for ``alpha_fn``.

    With ``allow_log=False`` a simple pole in ``u alpha'`` raises
    :class:`NotIntegrableToRational` instead of producing a log term.
    """
    if not alpha_fn.is_decaying:
        raise ValueError("alpha must decay at infinity")
    if any(p.imag <= 0 for p in alpha_fn.poles):
        raise ValueError("alpha must be analytic in the lower half-plane")
    integrand = alpha_fn.derivative().times_u()
    simple = tuple((p, c) for p, m, c in integrand.terms if m == 1)
    if simple and not allow_log:
        raise NotIntegrableToRational("u * alpha' has simple poles (logarithmic potential)")
    rest = RationalFn(tuple(t for t in integrand.terms if t[1] > 1), integrand.constant)
    return PerturbationSolution(alpha_fn, rest.antiderivative(), simple)


def family_fields(sol: PerturbationSolution, u, t):
    """``R = 1/z_u`` and ``V = i Phi_u / z_u`` in the family's own gauge."""
    zu = sol.z_u(u, t)
    return 1.0 / zu, 1j * sol.phi_u(u, t) / zu


def family_state(sol: PerturbationSolution, grid: Grid, t: float) -> DyachenkoState:
    """Solver state in the stretched coordinate ``s = u t``.

    There ``z = s + alpha(s/t)`` so ``R -> 1`` at infinity, the velocity is
    exactly the background ``V = i s / t`` and the stored perturbation of
    ``V`` vanishes.  The state runs with strain ``gamma = 1/t``.
    """
    if t <= 0:
        raise SingularTime("the family is sampled for t > 0")
    return DyachenkoState(
        ComplexField(grid, samples=family_R_stretched(sol, grid.u, t) - 1.0),
        ComplexField.constant(grid, 0.0),
        t,
        1.0 / t,
    )


def family_R_stretched(sol: PerturbationSolution, s, t):
    return 1.0 / (1.0 + sol.alpha_fn.derivative()(np.asarray(s) / t) / t)


def rejected_fields(alpha_fn: RationalFn, u, t) -> "ImplicitFields":
    """Fields with the alternative potential ``Phi0' = u alpha`` (not a solution)."""
    u = np.asarray(u, dtype=float)
    return ImplicitFields(t + alpha_fn.derivative()(u), u + 0j,
                          u * t + u * alpha_fn(u), 0.5 * u**2 + 0j)


def solver_tracking_error(sol: PerturbationSolution, config: SimConfig, t_start: float = 1.0):
    """Max field error of the solver started from the family at ``t_start``.

    Returns ``(max_error, times, errors)``; the error at a stored state is
    ``max(|R - R_exact|, |V - V_exact|)`` in the stretched gauge, where the
    stored velocity perturbation is exactly zero.
    """
    state = family_state(sol, config.grid, t_start)
    traj = integrate(state, config)
    times, errs = [], []
    for st in traj.states:
        exact = family_R_stretched(sol, config.grid.u, st.t) - 1.0
        err = max(np.abs(st.R1.samples - exact).max(), np.abs(st.V.samples).max())
        times.append(st.t)
        errs.append(float(err))
    return max(errs), np.array(times), np.array(errs)


# implicit equations ---------------------------------------------------------

@dataclass
class ImplicitFields:
    z_u: np.ndarray
    z_t: np.ndarray
    phi_u: np.ndarray
    phi_t: np.ndarray


@dataclass(frozen=True)
class ImplicitResidual:
    res1: float
    res2: float                 # after the lower-analytic projection
    res2_raw: float


def implicit_equations(f: ImplicitFields):
    """Pointwise residuals of the kinematic and dynamic conformal equations."""
    zu, zt, pu, pt = (np.asarray(a, dtype=complex) for a in (f.z_u, f.z_t, f.phi_u, f.phi_t))
    e1 = zt * np.conj(zu) - np.conj(zt) * zu + pu - np.conj(pu)
    e2 = pt.real * zu - pu.real * zt + 0.5 * np.conj(pu) ** 2 / np.conj(zu)
    return e1, e2


def residual_implicit(f: ImplicitFields, grid: Grid | None = None,
                      mask=None) -> ImplicitResidual:
    """Max-norm residuals; the second equation is projected when a grid is given.

    ``mask`` restricts the norms to part of the grid (the projection itself
    always uses every sample).
    """
    e1, e2 = implicit_equations(f)
    pe2 = project_minus(ComplexField(grid, samples=e2)).samples if grid is not None else e2
    if mask is None:
        mask = slice(None)
    return ImplicitResidual(float(np.max(np.abs(e1[mask]))), float(np.max(np.abs(pe2[mask]))),
                            float(np.max(np.abs(e2[mask]))))


FD5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def fields_from_samples(times, z, phi, du: float) -> ImplicitFields:
    """Fields at the middle of five equally spaced snapshots.

    ``z`` and ``phi`` have shape ``(5, n_u)`` on a uniform ``u`` grid;
    derivatives are fourth-order central differences (one-sided at the ends
    in ``u``).
    """
    times = np.asarray(times, dtype=float)
    z = np.asarray(z, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    if times.shape != (5,) or z.shape[0] != 5 or phi.shape != z.shape:
        raise ValueError("need five snapshots of matching shape")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ValueError("snapshots must be equally spaced in time")
    z_t = np.tensordot(FD5, z, axes=1) / dt[0]
    phi_t = np.tensordot(FD5, phi, axes=1) / dt[0]
    z_u = _ddu(z[2], du)
    phi_u = _ddu(phi[2], du)
    return ImplicitFields(z_u, z_t, phi_u, phi_t)


def _ddu(a, du):
    out = np.gradient(a, du, edge_order=2)
    out[2:-2] = (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * du)
    return out


# pole family ----------------------------------------------------------------

@dataclass(frozen=True)
class PoleFamilyParams:
    A: float
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("pole height a must be positive")


def pole_family_alpha(params: PoleFamilyParams, mirrored: bool = False) -> RationalFn:
    """``A/(u + i a)``; ``mirrored`` moves the pole to ``+i a``."""
    pole = 1j * params.a if mirrored else -1j * params.a
    return RationalFn.pole(pole, params.A)


def pole_family_shape(params: PoleFamilyParams, t: float, u, mirrored: bool = False) -> SurfaceShape:
    """Parametric surface ``x = u + A u t/(u^2+a^2 t^2)``, ``y = -a A t^2/(u^2+a^2 t^2)``.

    This is ``z = u t + A/(u + i a)`` after ``u -> u/t``.  The mirrored
    member (pole in the upper half-plane) flips the sign of ``y``.
    """
    A, a = params.A, params.a
    u = np.asarray(u, dtype=float)
    den = u**2 + a**2 * t**2
    x = u + A * u * t / den
    y = -a * A * t**2 / den
    if mirrored:
        y = -y
    return SurfaceShape(u, x, y, t)


def dxdu(params: PoleFamilyParams, u, t):
    """``dx/du`` of the pole-family surface."""
    A, a = params.A, params.a
    u = np.asarray(u, dtype=float)
    den = u**2 + a**2 * t**2
    return 1.0 + A * t * (a**2 * t**2 - u**2) / den**2


def default_window(A: float) -> tuple[float, float]:
    """Times with ``A t`` in ``[1, 10]``, the window where the threshold is sharp."""
    return (1.0 / A, 10.0 / A) if A > 0 else (10.0 / A, 1.0 / A)


@dataclass
class BifurcationReport:
    A: float
    a: float
    cls: str
    critical_points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"A": self.A, "a": self.a, "class": self.cls,
                "critical_points": self.critical_points}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def bifurcation_classify(params: PoleFamilyParams, t_window=None, n_t: int = 11) -> BifurcationReport:
    """Classify by the threshold ``a^2`` vs ``A^2/8``.

    When multivalued, critical loci are reported from
    ``u^2 = A t (1 +- sqrt(1 - 8 a^2/A^2))/2 - a^2 t^2`` at ``n_t`` times in the
    window, keeping real roots only.
    """
    A, a = params.A, params.a
    if A == 0 or a**2 > A**2 / 8:
        return BifurcationReport(A, a, "one_valued")
    cls = "bubbles" if A > 0 else "droplets"
    t_lo, t_hi = t_window if t_window is not None else default_window(A)
    disc = math.sqrt(max(1.0 - 8.0 * a**2 / A**2, 0.0))
    points = []
    for t in np.linspace(t_lo, t_hi, n_t):
        for branch, sign in (("+", 1.0), ("-", -1.0)):
            u2 = 0.5 * A * t * (1.0 + sign * disc) - a**2 * t**2
            if u2 >= 0:
                points.append({"u": math.sqrt(u2), "t": float(t), "branch": branch})
    return BifurcationReport(A, a, cls, points)


def brute_force_min_dxdu(params: PoleFamilyParams, t_window=None, n_u: int = 2000,
                         n_t: int = 2000, polish: bool = True) -> float:
    """Minimum of ``dx/du`` over a ``(u, t)`` grid, optionally polished in ``u``.

    A non-positive minimum means the surface folds somewhere in the window.
    """
    A, a = params.A, params.a
    t_lo, t_hi = t_window if t_window is not None else default_window(A)
    ts = np.linspace(t_lo, t_hi, n_t)
    u_max = 4.0 * a * max(abs(t_lo), abs(t_hi))
    us = np.linspace(-u_max, u_max, n_u)
    vals = dxdu(params, us[:, None], ts[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    best = float(vals[i, j])
    if polish:
        t = ts[j]
        du = us[1] - us[0]
        lo, hi = us[i] - du, us[i] + du
        res = optimize.minimize_scalar(lambda u: dxdu(params, u, t), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def threshold_bisect(A: float, decide, a_lo: float, a_hi: float, tol: float = 1e-10) -> float:
    """Bisection on ``a`` for the flip of ``decide(params) -> multivalued``."""
    lo_multi = decide(PoleFamilyParams(A, a_lo))
    if lo_multi == decide(PoleFamilyParams(A, a_hi)):
        raise ValueError("the decision does not flip on the bracket")
    while a_hi - a_lo > tol:
        mid = 0.5 * (a_lo + a_hi)
        if decide(PoleFamilyParams(A, mid)) == lo_multi:
            a_lo = mid
        else:
            a_hi = mid
    return 0.5 * (a_lo + a_hi)


# large-time series ----------------------------------------------------------

@dataclass(frozen=True)
class SeriesTerm:
    phi1: RationalFn
    z2: RationalFn
    solvability: float
    flagged: bool
    origin_residue: complex = 0j


def series_next(alpha_fn: RationalFn, z1: RationalFn, reading: str = "derived") -> SeriesTerm:
    """Next terms of ``z = u t + alpha + z1/t + z2/t^2 + ...``.

    ``reading="derived"`` uses ``Phi_k = u z_k`` and ``z2 = P-(conj(z1) alpha' - z1 conj(alpha)')``,
    which makes the residual of the truncated series fall as ``t^-3``.
    ``reading="literal"`` solves ``u z2 = -P-(...)``; a non-zero right side at
    ``u = 0`` is reported through ``solvability`` and ``flagged``, and ``z2``
    then carries the simple pole ``origin_residue / u``.
    """
    phi1 = z1.times_u()
    rhs = (z1.conj() * alpha_fn.derivative() - z1 * alpha_fn.conj().derivative()).pminus()
    if reading == "derived":
        return SeriesTerm(phi1, rhs, 0.0, False)
    if reading != "literal":
        raise ValueError(f"unknown reading {reading!r}")
    rhs = -rhs
    solvability = abs(complex(rhs(0.0)))
    regular, residue = ratfn_divide_by_u(rhs)
    flagged = solvability >= SOLVABILITY_TOL
    return SeriesTerm(phi1, regular, solvability, flagged, residue if flagged else 0j)


def series_fields(alpha_fn: RationalFn, z1: RationalFn, z2: RationalFn, u, t,
                  z2_origin: complex = 0j) -> ImplicitFields:
    """Implicit-equation inputs for the series truncated after ``z2/t^2``.

    Potentials follow ``Phi_k = u z_k``.  ``z2_origin`` adds ``c/u`` to
    ``z2`` (only meaningful away from ``u = 0``).
    """
    u = np.asarray(u, dtype=float)
    da, dz1, dz2 = alpha_fn.derivative(), z1.derivative(), z2.derivative()
    z2v = z2(u) + z2_origin / u if z2_origin else z2(u) + 0j
    dz2v = dz2(u) - z2_origin / u**2 if z2_origin else dz2(u) + 0j
    z_u = t + da(u) + dz1(u) / t + dz2v / t**2
    z_t = u - z1(u) / t**2 - 2 * z2v / t**3
    phi_u = u * t + u * da(u) + (z1(u) + u * dz1(u)) / t + (z2v + u * dz2v) / t**2
    phi_t = 0.5 * u**2 - u * z1(u) / t**2 - 2 * u * z2v / t**3
    return ImplicitFields(z_u, z_t, phi_u, phi_t)


# output ---------------------------------------------------------------------

def write_shape_csv(shape: SurfaceShape, path) -> None:
    with open(Path(path), "w") as fh:
        fh.write("u,x,y,t\n")
        for row in shape.to_rows():
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
