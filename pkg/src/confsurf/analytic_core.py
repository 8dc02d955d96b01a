"""Exact rational-function algebra with simple and higher-order poles.

A :class:`RationalFn` is ``constant + sum_j c_j / (w - p_j)**m_j`` with every
pole off the real axis.  Everything here is closed form, so these objects
serve as the discretization-free oracle for the spectral code: the lower
half-plane projector is a filter on pole location, the conjugate is a
reflection, and products are re-expanded by partial fractions.

Convention: "analytic" means analytic and decaying in ``Im w < 0``, so the
analytic part of a rational function is carried by its upper half-plane
poles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (
    NotIntegrableToRational,
    OrderOverflow,
    PoleHit,
    PoleOnAxis,
    PolynomialGrowth,
)

MERGE_TOL = 1e-12
AXIS_TOL = 1e-14
POLE_HIT_TOL = 1e-14
DEFAULT_MAX_ORDER = 8

Term = tuple  # (pole: complex, order: int, coeff: complex)


def _canonical(terms: Iterable[Term]) -> tuple[Term, ...]:
    merged: list[list] = []
    for pole, order, coeff in terms:
        pole, order, coeff = complex(pole), int(order), complex(coeff)
        if order < 1:
            raise ValueError(f"pole order must be positive, got {order}")
        for slot in merged:
            if slot[1] == order and abs(slot[0] - pole) <= MERGE_TOL:
                slot[2] += coeff
                break
        else:
            merged.append([pole, order, coeff])
    out = [(p, m, c) for p, m, c in merged if c != 0]
    out.sort(key=lambda t: (t[0].real, t[0].imag, t[1]))
    return tuple(out)


@dataclass(frozen=True)
class RationalFn:
    """``constant + sum c / (w - pole)**order`` with no pole on the real axis."""

    terms: tuple = ()
    constant: complex = 0j
    max_order: int = field(default=DEFAULT_MAX_ORDER, compare=False)

    def __post_init__(self):
        canon = _canonical(self.terms)
        for pole, order, _ in canon:
            if abs(pole.imag) <= AXIS_TOL:
                raise PoleOnAxis(f"pole {pole} lies on the real axis")
            if order > self.max_order:
                raise OrderOverflow(f"order {order} exceeds cap {self.max_order}")
        object.__setattr__(self, "terms", canon)
        object.__setattr__(self, "constant", complex(self.constant))

    # construction helpers -------------------------------------------------
    @classmethod
    def pole(cls, pole: complex, coeff: complex = 1.0, order: int = 1) -> "RationalFn":
        return cls(((pole, order, coeff),))

    @classmethod
    def const(cls, value: complex) -> "RationalFn":
        return cls((), value)

    @property
    def poles(self) -> list[complex]:
        return sorted({t[0] for t in self.terms}, key=lambda p: (p.real, p.imag))

    @property
    def is_decaying(self) -> bool:
        return self.constant == 0

    def asymptotic_residue(self) -> complex:
        """``lim_{|w|->inf} w * (f(w) - constant)``."""
        return sum((c for _, m, c in self.terms if m == 1), 0j)

    # evaluation -----------------------------------------------------------
    def __call__(self, w):
        return ratfn_eval(self, w)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        return RationalFn(self.terms + other.terms, self.constant + other.constant,
                          max(self.max_order, other.max_order))

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, RationalFn):
            return ratfn_arith(self, other, "mul")
        return self.scale(other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, factor: complex) -> "RationalFn":
        factor = complex(factor)
        return RationalFn(tuple((p, m, c * factor) for p, m, c in self.terms),
                          self.constant * factor, self.max_order)

    def derivative(self) -> "RationalFn":
        return ratfn_arith(self, None, "derivative")

    def antiderivative(self) -> "RationalFn":
        return ratfn_arith(self, None, "antiderivative")

    def times_u(self) -> "RationalFn":
        """Multiply by the identity function ``u``; needs ``constant == 0``."""
        if self.constant != 0:
            raise PolynomialGrowth("u * constant is not a decaying rational function")
        out = []
        const = 0j
        for p, m, c in self.terms:
            # u/(u-p)^m = 1/(u-p)^(m-1) + p/(u-p)^m
            if m == 1:
                const += c
            else:
                out.append((p, m - 1, c))
            out.append((p, m, c * p))
        return RationalFn(tuple(out), const, self.max_order)

    def conj(self) -> "RationalFn":
        return ratfn_conj(self)

    def pminus(self) -> "RationalFn":
        return ratfn_pminus(self)

    def pplus(self) -> "RationalFn":
        return ratfn_pplus(self)

    # comparison -----------------------------------------------------------
    def isclose(self, other: "RationalFn", tol: float = 1e-12) -> bool:
        a, b = self.terms, other.terms
        if abs(self.constant - other.constant) > tol or len(a) != len(b):
            return False
        for (p, m, c), (q, n, d) in zip(a, b):
            if m != n or abs(p - q) > tol or abs(c - d) > tol:
                return False
        return True

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "constant": [self.constant.real, self.constant.imag],
            "terms": [
                {"pole": [p.real, p.imag], "order": m, "coeff": [c.real, c.imag]}
                for p, m, c in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RationalFn":
        const = complex(*data.get("constant", [0.0, 0.0]))
        terms = tuple(
            (complex(*t["pole"]), int(t.get("order", 1)), complex(*t["coeff"]))
            for t in data.get("terms", [])
        )
        return cls(terms, const)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RationalFn":
        return cls.from_dict(json.loads(text))


ZERO = RationalFn()


def _coerce(x) -> RationalFn:
    if isinstance(x, RationalFn):
        return x
    return RationalFn.const(x)


def ratfn_eval(f: RationalFn, w):
    """Evaluate ``f`` at a scalar or array of points."""
    w_arr = np.asarray(w, dtype=complex)
    out = np.full(w_arr.shape, f.constant, dtype=complex)
    for p, m, c in f.terms:
        d = w_arr - p
        if np.any(np.abs(d) < POLE_HIT_TOL):
            raise PoleHit(f"evaluation point hits the pole {p}")
        out = out + c / d**m
    if np.ndim(w) == 0:
        return complex(out)
    return out


def ratfn_pminus(f: RationalFn) -> RationalFn:
    """Part analytic in the lower half-plane: upper poles plus half the constant."""
    return RationalFn(tuple(t for t in f.terms if t[0].imag > 0), f.constant / 2, f.max_order)


def ratfn_pplus(f: RationalFn) -> RationalFn:
    return RationalFn(tuple(t for t in f.terms if t[0].imag < 0), f.constant / 2, f.max_order)


def ratfn_conj(f: RationalFn) -> RationalFn:
    """Reflect across the real axis: boundary values become complex conjugates."""
    return RationalFn(
        tuple((p.conjugate(), m, c.conjugate()) for p, m, c in f.terms),
        f.constant.conjugate(),
        f.max_order,
    )


def _pf_pair(p: complex, m: int, q: complex, n: int) -> list[Term]:
    """Partial fractions of ``1 / ((w-p)^m (w-q)^n)`` for distinct ``p, q``."""
    out = []
    d = p - q
    for j in range(1, m + 1):
        r = m - j
        out.append((p, j, math.comb(n + r - 1, r) * (-1) ** r * d ** (-n - r)))
    for j in range(1, n + 1):
        r = n - j
        out.append((q, j, math.comb(m + r - 1, r) * (-1) ** r * (-d) ** (-m - r)))
    return out


def _mul_terms(a: Sequence[Term], b: Sequence[Term], cap: int) -> list[Term]:
    out = []
    for p, m, c in a:
        for q, n, d in b:
            if abs(p - q) <= MERGE_TOL:
                if m + n > cap:
                    raise OrderOverflow(f"product order {m + n} exceeds cap {cap}")
                out.append((p, m + n, c * d))
            else:
                out.extend((pole, order, c * d * k) for pole, order, k in _pf_pair(p, m, q, n))
    return out


def ratfn_arith(f: RationalFn, g: RationalFn | None, op: str) -> RationalFn:
    """Closed-form ``add``, ``mul``, ``derivative`` or ``antiderivative``."""
    cap = f.max_order if g is None else max(f.max_order, g.max_order)
    if op == "add":
        return f + g
    if op == "mul":
        terms = _mul_terms(f.terms, g.terms, cap)
        terms += [(p, m, c * g.constant) for p, m, c in f.terms]
        terms += [(p, m, c * f.constant) for p, m, c in g.terms]
        return RationalFn(tuple(terms), f.constant * g.constant, cap)
    if op == "derivative":
        terms = tuple((p, m + 1, -m * c) for p, m, c in f.terms)
        if any(m > cap for _, m, _ in terms):
            raise OrderOverflow("derivative exceeds the pole-order cap")
        return RationalFn(terms, 0j, cap)
    if op == "antiderivative":
        if f.constant != 0:
            raise NotIntegrableToRational("constant term integrates to a polynomial")
        if any(m == 1 for _, m, _ in f.terms):
            raise NotIntegrableToRational("simple poles integrate to logarithms")
        return RationalFn(tuple((p, m - 1, -c / (m - 1)) for p, m, c in f.terms), 0j, cap)
    raise ValueError(f"unknown operation {op!r}")


def ratfn_divide_by_u(f: RationalFn) -> tuple[RationalFn, complex]:
    """Split ``f(u)/u`` into a regular part and the residue of the pole at ``u = 0``.

    The residue equals ``f(0)``; when it vanishes the quotient is a genuine
    rational function with no pole on the axis.
    """
    if f.constant != 0:
        raise PolynomialGrowth("constant / u does not decay fast enough")
    regular, residue = [], 0j
    for p, m, c in f.terms:
        for pole, order, k in _pf_pair(p, m, 0j, 1):
            if pole == 0j:
                residue += c * k
            else:
                regular.append((pole, order, c * k))
    return RationalFn(tuple(regular), 0j, f.max_order), residue


# periodic images -----------------------------------------------------------

@lru_cache(maxsize=None)
def _cot_derivative_poly(j: int) -> Polynomial:
    """Polynomial ``Q_j`` with ``d^j/dx^j cot x = Q_j(cot x)``."""
    q = Polynomial([0.0, 1.0])
    dcot = Polynomial([-1.0, 0.0, -1.0])
    for _ in range(j):
        q = q.deriv() * dcot
    return q


def _stable_cot(x):
    x = np.asarray(x, dtype=complex)
    out = np.empty_like(x)
    up = x.imag >= 0
    e = np.exp(2j * x[up])
    out[up] = 1j * (1 + e) / (e - 1)
    e = np.exp(-2j * x[~up])
    out[~up] = 1j * (1 + e) / (1 - e)
    return out


def periodic_pole_term(w, pole: complex, order: int, length: float,
                       symmetric: bool = False):
    """Period-``length`` image of ``1/(w-pole)**order``.

    The lattice sum over ``pole + n*length``; for simple poles the constant
    ``+-i*pi/length`` is removed so that the result decays on the same side
    as the original term.  This keeps the map from line functions to box
    functions compatible with the half-plane projectors.  ``symmetric=True``
    keeps the symmetrically summed series instead, which stays closest to
    the line function near the middle of the box.
    """
    x = np.pi * (np.asarray(w, dtype=complex) - pole) / length
    if np.any(np.abs(np.sin(x)) < POLE_HIT_TOL):
        raise PoleHit(f"evaluation point hits a periodic image of {pole}")
    cot = _stable_cot(x)
    val = _cot_derivative_poly(order - 1)(cot)
    val = val * ((-1) ** (order - 1) / math.factorial(order - 1)) * (np.pi / length) ** order
    if order == 1 and not symmetric:
        val = val - np.sign(pole.imag) * 1j * np.pi / length
    return val


def ratfn_eval_periodic(f: RationalFn, w, length: float, symmetric: bool = False):
    """Evaluate the period-``length`` image of ``f`` (constant unchanged)."""
    w_arr = np.asarray(w, dtype=complex)
    out = np.full(w_arr.shape, f.constant, dtype=complex)
    for p, m, c in f.terms:
        out = out + c * periodic_pole_term(w_arr, p, m, length, symmetric)
    if np.ndim(w) == 0:
        return complex(out)
    return out
