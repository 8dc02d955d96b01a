"""Conformal-variable tools for free-surface flows: exact rational oracles,
a spectral R-V solver, closed-form compressing-fluid solutions, the
narrow-cut Hopf reduction, zero invariants and self-similar profiles."""
from .analytic_core import RationalFn
from .dyachenko import DyachenkoState, SimConfig, integrate
from .errors import ConfigError, ConfsurfError, NumericalFailure
from .spectral import ComplexField, Grid

__all__ = [
    "ComplexField",
    "ConfigError",
    "ConfsurfError",
    "DyachenkoState",
    "Grid",
    "NumericalFailure",
    "RationalFn",
    "SimConfig",
    "integrate",
]
__version__ = "0.1.0"
