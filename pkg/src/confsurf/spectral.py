"""Periodic pseudospectral fields on the conformal coordinate.

Samples live on ``u_j = -L/2 + j*L/n``.  A field is *lower-analytic* when its
spectrum is supported on ``k <= 0``: each ``exp(i*kappa*w)`` with
``kappa <= 0`` stays bounded as ``Im w -> -inf``.  All projectors below use
that convention.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .analytic_core import RationalFn, ratfn_eval, ratfn_eval_periodic
from .errors import ContinuationUnreliable, ZeroModeError

DEFAULT_N = 1024
DEFAULT_LENGTH = 64 * 2 * math.pi

# off-axis continuation: coefficients below NOISE_THRESHOLD * max are treated
# as round-off; EVAL_TOL bounds the amplified noise at the evaluation height
NOISE_THRESHOLD = 1e-15
EVAL_TOL = 1e-7
NOISE_MARGIN = 10.0
NOISE_CEILING = 1e-13


@dataclass(frozen=True)
class Grid:
    n_points: int = DEFAULT_N
    length: float = DEFAULT_LENGTH

    def __post_init__(self):
        n = self.n_points
        if n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {n}")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def du(self) -> float:
        return self.length / self.n_points

    @property
    def origin(self) -> float:
        return -self.length / 2

    @cached_property
    def u(self) -> np.ndarray:
        return self.origin + self.du * np.arange(self.n_points)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order; Nyquist carries the label -n/2."""
        return np.rint(np.fft.fftfreq(self.n_points) * self.n_points).astype(int)

    @cached_property
    def kappa(self) -> np.ndarray:
        return 2 * np.pi * self.k / self.length

    def interior(self, fraction: float = 0.5) -> np.ndarray:
        """Mask of points with ``|u| <= fraction * L/2``."""
        return np.abs(self.u) <= fraction * self.length / 2


class ComplexField:
    """Complex samples on a :class:`Grid` with a lazily cached spectrum.

    The spectrum is ``fft(samples)/n`` with phases referenced to the grid
    origin, so ``f(u) = sum_k c_k exp(i kappa_k (u - u0))``.
    """

    def __init__(self, grid: Grid, samples=None, spectrum=None):
        if samples is None and spectrum is None:
            raise ValueError("need samples or spectrum")
        self.grid = grid
        self._samples = None if samples is None else np.asarray(samples, dtype=complex)
        self._spectrum = None if spectrum is None else np.asarray(spectrum, dtype=complex)
        for arr in (self._samples, self._spectrum):
            if arr is not None and arr.shape != (grid.n_points,):
                raise ValueError("array length does not match the grid")

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ComplexField":
        return cls(grid, samples=func(grid.u))

    @classmethod
    def from_ratfn(cls, grid: Grid, f: RationalFn, periodic: bool = True,
                   symmetric: bool = False) -> "ComplexField":
        """Sample a rational function; by default its periodic image is used."""
        if periodic:
            return cls(grid, samples=ratfn_eval_periodic(f, grid.u, grid.length, symmetric))
        return cls(grid, samples=ratfn_eval(f, grid.u))

    @classmethod
    def constant(cls, grid: Grid, value: complex) -> "ComplexField":
        return cls(grid, samples=np.full(grid.n_points, value, dtype=complex))

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            self._samples = np.fft.ifft(self._spectrum) * self.grid.n_points
        return self._samples

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = np.fft.fft(self._samples) / self.grid.n_points
        return self._spectrum

    # pointwise algebra ----------------------------------------------------
    def _wrap(self, values) -> "ComplexField":
        return ComplexField(self.grid, samples=values)

    def _other(self, other):
        if isinstance(other, ComplexField):
            return other.samples
        return other

    def __add__(self, other):
        return self._wrap(self.samples + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.samples - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.samples)

    def __mul__(self, other):
        return self._wrap(self.samples * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.samples / self._other(other))

    def __rtruediv__(self, other):
        return self._wrap(self._other(other) / self.samples)

    def __neg__(self):
        return self._wrap(-self.samples)

    def conj(self) -> "ComplexField":
        return self._wrap(np.conj(self.samples))

    def mean(self) -> complex:
        return complex(self.spectrum[0])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def positive_content(self) -> float:
        """``max_{k>0} |c_k|`` relative to ``max_k |c_k|`` (0 for a zero field)."""
        spec = np.abs(self.spectrum)
        top = spec.max()
        if top == 0:
            return 0.0
        return float(spec[self.grid.k > 0].max(initial=0.0) / top)

    def is_lower_analytic(self, tol: float = 1e-10) -> bool:
        return self.positive_content() <= tol

    def integral(self) -> complex:
        """Trapezoid rule over one period (spectrally exact)."""
        return complex(np.sum(self.samples) * self.grid.du)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, samples=self.samples.copy())


def _with_spectrum(f: ComplexField, spectrum) -> ComplexField:
    return ComplexField(f.grid, spectrum=spectrum)


def project_minus(f: ComplexField) -> ComplexField:
    """Keep ``k < 0``, halve ``k = 0``, drop ``k > 0``."""
    k = f.grid.k
    spec = np.where(k < 0, f.spectrum, 0j)
    spec[0] = f.spectrum[0] / 2
    return _with_spectrum(f, spec)


def project_plus(f: ComplexField) -> ComplexField:
    k = f.grid.k
    spec = np.where(k > 0, f.spectrum, 0j)
    spec[0] = f.spectrum[0] / 2
    return _with_spectrum(f, spec)


def hilbert(f: ComplexField) -> ComplexField:
    """Multiply mode ``k`` by ``i*sign(k)``; then ``P- = (1 + i H)/2``."""
    return _with_spectrum(f, 1j * np.sign(f.grid.k) * f.spectrum)


def deriv(f: ComplexField) -> ComplexField:
    return _with_spectrum(f, 1j * f.grid.kappa * f.spectrum)


def antideriv(f: ComplexField, zero_mode_tol: float = 1e-10) -> ComplexField:
    spec = f.spectrum
    top = np.abs(spec).max()
    if top > 0 and abs(spec[0]) > zero_mode_tol * top:
        raise ZeroModeError(f"mean {spec[0]:.3e} makes the antiderivative secular")
    kappa = f.grid.kappa
    out = np.zeros_like(spec)
    nz = kappa != 0
    out[nz] = spec[nz] / (1j * kappa[nz])
    return _with_spectrum(f, out)


def dealias(f: ComplexField) -> ComplexField:
    """Two-thirds rule: zero every mode with ``|k| > n/3``."""
    n = f.grid.n_points
    return _with_spectrum(f, np.where(np.abs(f.grid.k) > n / 3, 0j, f.spectrum))


def drop_positive(f: ComplexField) -> ComplexField:
    """Zero the ``k > 0`` modes only (no halving of the mean)."""
    return _with_spectrum(f, np.where(f.grid.k > 0, 0j, f.spectrum))


def validity_height(f: ComplexField, noise_threshold: float = NOISE_THRESHOLD,
                    tol_eval: float = EVAL_TOL) -> float:
    """Largest ``Im w`` where the amplified spectral tail stays below ``tol_eval``.

    Coefficients under ``noise_threshold * max|c|`` are discarded, or under
    ten times the round-off floor when the outer band is pure round-off.  The tail
    left at the highest surviving wavenumber ``kappa_c`` (round-off for a
    resolved field, a truncation remainder for an under-resolved one) grows
    like ``exp(kappa_c * Im w)`` when continued upward.
    """
    spec = np.abs(f.spectrum)
    top = spec.max()
    if top == 0:
        return math.inf
    kappa = np.abs(f.grid.kappa)
    lower = f.grid.k <= 0
    # round-off accumulated by time stepping can sit above a fixed threshold;
    # for resolved fields the outer quarter of the band measures it
    outer = lower & (kappa >= 0.75 * kappa[lower].max())
    level = float(np.median(spec[outer]))
    floor = noise_threshold * top
    if level < NOISE_CEILING * top:
        floor = max(floor, NOISE_MARGIN * level)
    kept = (spec >= floor) & lower
    if not kept.any():
        return math.inf
    kappa_c = kappa[kept].max()
    if kappa_c == 0:
        return math.inf
    if kappa_c < kappa[lower].max():
        # decays into the noise before the grid edge: resolved or band-limited
        tail = floor
    else:
        edge = kept & (kappa >= kappa_c - 2.5 * (2 * np.pi / f.grid.length))
        tail = max(spec[edge].max(), floor)
    return max(math.log(tol_eval * top / tail), 0.0) / kappa_c


def eval_offaxis(f: ComplexField, w, noise_threshold: float = NOISE_THRESHOLD,
                 tol_eval: float = EVAL_TOL, order: int = 0):
    """Analytic continuation of a lower-analytic field to complex ``w``.

    ``order`` > 0 evaluates that derivative of the continuation.  Points in
    the lower half-plane are always valid; points above the axis must lie
    below :func:`validity_height`.
    """
    w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
    spec = f.spectrum
    top = np.abs(spec).max()
    keep = (f.grid.k <= 0) & (np.abs(spec) >= noise_threshold * top)
    if np.any(w_arr.imag > 0):
        h_max = validity_height(f, noise_threshold, tol_eval)
        if w_arr.imag.max() > h_max:
            raise ContinuationUnreliable(
                f"Im w = {w_arr.imag.max():.4g} exceeds validity height {h_max:.4g}")
    kappa = f.grid.kappa[keep]
    coeff = spec[keep] * (1j * kappa) ** order
    phase = np.exp(1j * np.outer(w_arr - f.grid.origin, kappa))
    out = phase @ coeff
    if np.ndim(w) == 0:
        return complex(out[0])
    return out.reshape(np.shape(w))


# dumps ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_field_csv(f: ComplexField, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "re", "im"])
        for u, v in zip(f.grid.u, f.samples):
            writer.writerow([_fmt(u), _fmt(v.real), _fmt(v.imag)])


def write_spectrum_csv(f: ComplexField, path) -> None:
    order = np.argsort(f.grid.k, kind="stable")
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "re", "im"])
        for k, c in zip(f.grid.k[order], f.spectrum[order]):
            writer.writerow([int(k), _fmt(c.real), _fmt(c.imag)])


def read_field_csv(path, grid: Grid | None = None) -> ComplexField:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if grid is None:
        n = data.shape[0]
        du = data[1, 0] - data[0, 0]
        grid = Grid(n, n * du)
    return ComplexField(grid, samples=data[:, 1] + 1j * data[:, 2])
