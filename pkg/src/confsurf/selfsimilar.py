"""Self-similar substitution ``z = t^a z0(u)``, ``Phi = t^(2a-1) Phi0(u)``.

Inserting the substitution into the implicit equations leaves the profile
equations

    a (z0 conj(z0') - conj(z0) z0') = conj(Phi0') - Phi0'
    (2a - 1) Psi0 z0' - a Psi0' z0 + conj(Phi0')^2 / (2 conj(z0')) = 0

with ``Psi0 = Re Phi0``.  The kinematic equation carries both products of
``z0`` with the conjugate derivative; keeping only the first one fails
already for the flat compressing profile ``z0 = u``, ``Phi0 = u^2/2``, which
solves both equations for every exponent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic_core import RationalFn
from .compressed_fluid import ImplicitFields
from .errors import DivisionByZeroOnGrid
from .spectral import ComplexField, Grid, project_minus

MIN_ABS_ZU = 1e-12

LABELLED_EXPONENTS = {
    -3.0: "parabolic Dirichlet jet",
    -1.0: "compressed fluid",
    2.0: "gravity wedge",
}


@dataclass(frozen=True)
class SelfSimilarProfile:
    """``z0 = z_lin u + z_dec(u)``, ``Phi0 = phi_quad u^2/2 + phi_lin u + phi_dec(u)``."""
    alpha_exp: float
    z_lin: complex = 1.0
    z_dec: RationalFn = RationalFn()
    phi_quad: complex = 0.0
    phi_lin: complex = 0.0
    phi_dec: RationalFn = RationalFn()

    def z0(self, u):
        return self.z_lin * np.asarray(u) + self.z_dec(u)

    def z0_u(self, u):
        return self.z_lin + self.z_dec.derivative()(u)

    def phi0(self, u):
        u = np.asarray(u)
        return 0.5 * self.phi_quad * u**2 + self.phi_lin * u + self.phi_dec(u)

    def phi0_u(self, u):
        return self.phi_quad * np.asarray(u) + self.phi_lin + self.phi_dec.derivative()(u)


def compressed_anchor(alpha_exp: float = -1.0) -> SelfSimilarProfile:
    """Flat compressing profile ``z0 = u``, ``Phi0 = u^2/2``."""
    return SelfSimilarProfile(alpha_exp, 1.0, RationalFn(), 1.0, 0.0, RationalFn())


def substitute(profile: SelfSimilarProfile, t: float, grid: Grid):
    """Fields ``z = t^a z0`` and ``Phi = t^(2a-1) Phi0`` on the grid."""
    if t <= 0:
        raise ValueError("t must be positive")
    a = profile.alpha_exp
    u = grid.u
    z = ComplexField(grid, samples=t**a * (profile.z0(u) + 0j))
    phi = ComplexField(grid, samples=t ** (2 * a - 1) * (profile.phi0(u) + 0j))
    return z, phi


def implicit_fields(profile: SelfSimilarProfile, u, t: float) -> ImplicitFields:
    """Analytic ``z_u, z_t, Phi_u, Phi_t`` of the substituted fields."""
    a = profile.alpha_exp
    u = np.asarray(u, dtype=float)
    return ImplicitFields(
        t**a * profile.z0_u(u) + 0j,
        a * t ** (a - 1) * profile.z0(u) + 0j,
        t ** (2 * a - 1) * profile.phi0_u(u) + 0j,
        (2 * a - 1) * t ** (2 * a - 2) * profile.phi0(u) + 0j,
    )


def profile_equations(profile: SelfSimilarProfile, u):
    """Pointwise residuals of the two profile equations."""
    a = profile.alpha_exp
    z0 = profile.z0(u) + 0j
    zu = profile.z0_u(u) + 0j
    pu = profile.phi0_u(u) + 0j
    psi = np.real(profile.phi0(u))
    if np.abs(zu).min() < MIN_ABS_ZU:
        raise DivisionByZeroOnGrid("z0' vanishes on the grid")
    e1 = a * (z0 * np.conj(zu) - np.conj(z0) * zu) - (np.conj(pu) - pu)
    e2 = (2 * a - 1) * psi * zu - a * pu.real * z0 + 0.5 * np.conj(pu) ** 2 / np.conj(zu)
    return e1, e2


@dataclass(frozen=True)
class ProfileResidual:
    alpha_exp: float
    res1: float
    res2: float

    def to_json(self, grid: Grid) -> str:
        return json.dumps({"alpha_exp": self.alpha_exp, "res1": self.res1, "res2": self.res2,
                           "grid": {"n_points": grid.n_points, "length": grid.length}},
                          indent=2, sort_keys=True)


def residual_profile(profile: SelfSimilarProfile, grid: Grid, project: bool = True,
                     mask=None) -> ProfileResidual:
    """Max-norm residuals; the second equation is projected onto ``k <= 0``."""
    e1, e2 = profile_equations(profile, grid.u)
    if project:
        e2 = project_minus(ComplexField(grid, samples=e2)).samples
    if mask is None:
        mask = slice(None)
    return ProfileResidual(profile.alpha_exp, float(np.abs(e1[mask]).max()),
                           float(np.abs(e2[mask]).max()))


def write_residual_json(res: ProfileResidual, grid: Grid, path) -> None:
    Path(path).write_text(res.to_json(grid) + "\n")


# gravity --------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentReport:
    g: float
    unique_exponent: float | None
    table: tuple

    def to_dict(self) -> dict:
        return {"g": self.g, "unique_exponent": self.unique_exponent,
                "table": [dict(r) for r in self.table]}


def term_powers(alpha_exp: float) -> dict:
    """Powers of ``t`` carried by each term of the dynamic equation."""
    a = alpha_exp
    return {"inertia": 3 * a - 2, "gravity": 2 * a}


def gravity_exponent_check(g: float) -> ExponentReport:
    """Exponent bookkeeping for the dynamic equation with gravity.

    Inertial terms scale as ``t^(3a-2)`` and the gravity term ``g y z_u`` as
    ``t^(2a)``; with ``g != 0`` they balance only at ``a = 2``.
    """
    unique = 2.0 if g != 0 else None
    rows = []
    for a, label in sorted(LABELLED_EXPONENTS.items()):
        p = term_powers(a)
        ok = True if g == 0 else p["inertia"] == p["gravity"]
        rows.append((("alpha_exp", a), ("label", label), ("inertia_power", p["inertia"]),
                     ("gravity_power", p["gravity"]), ("admissible", ok)))
    return ExponentReport(float(g), unique, tuple(rows))
