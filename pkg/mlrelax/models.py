"""Domain types shared by the numeric modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from mlrelax.errors import DomainError, InvalidParameterError

Method = Literal['series', 'asymptotic', 'spectral', 'auto', 'exponential']
Spacing = Literal['log', 'linear']
Scheme = Literal['caputo_gl', 'rl_gl']
Approximant = Literal['stretched_exp', 'power_law', 'pade_small', 'pade_large']

METHODS = ('series', 'asymptotic', 'spectral', 'auto', 'exponential')
SCHEMES = ('caputo_gl', 'rl_gl')
APPROXIMANTS = ('stretched_exp', 'power_law', 'pade_small', 'pade_large')

# Kernels this close to alpha=1 collapse towards a delta at r=1.
NEAR_DEGENERATE_ALPHA = 0.99


@dataclass(frozen=True)
class Alpha:
    """Order parameter of the relaxation function, 0 < value <= 1."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value) or not 0.0 < value <= 1.0:
            raise InvalidParameterError(f'alpha must satisfy 0 < alpha <= 1, got {self.value!r}')
        object.__setattr__(self, 'value', value)

    @classmethod
    def coerce(cls, alpha: Alpha | float) -> Alpha:
        return alpha if isinstance(alpha, cls) else cls(alpha)

    @property
    def is_exponential(self) -> bool:
        return self.value == 1.0

    @property
    def near_degenerate(self) -> bool:
        return self.value >= NEAR_DEGENERATE_ALPHA

    def require_fractional(self, what: str = 'this operation') -> float:
        """Return the value, refusing alpha=1 where the spectral kernel degenerates."""
        if self.is_exponential:
            raise DomainError(f'{what} requires 0 < alpha < 1 (the alpha=1 spectrum is a delta at r=1)')
        return self.value

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class Tolerance:
    """Target relative accuracy plus an absolute floor."""

    rel: float = 1e-10
    abs: float = 0.0

    def __post_init__(self):
        if not 1e-15 <= self.rel <= 1e-2:
            raise InvalidParameterError(f'tol.rel must lie in [1e-15, 1e-2], got {self.rel!r}')
        if not (self.abs >= 0.0 and math.isfinite(self.abs)):
            raise InvalidParameterError(f'tol.abs must be finite and >= 0, got {self.abs!r}')

    def bound(self, value: float) -> float:
        """Admissible absolute error for a quantity of the given size."""
        return self.rel * abs(value) + self.abs

    def relaxed(self, rel: float) -> Tolerance:
        return Tolerance(rel=max(self.rel, rel), abs=self.abs)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation abscissae: count points between lo and hi, log or linear spaced."""

    lo: float
    hi: float
    count: int
    spacing: Spacing = 'log'

    def __post_init__(self):
        if self.spacing not in ('log', 'linear'):
            raise InvalidParameterError(f'unknown grid spacing {self.spacing!r}')
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidParameterError('grid bounds must be finite')
        if self.lo < 0.0:
            raise InvalidParameterError(f'grid lower bound must be >= 0, got {self.lo!r}')
        if self.hi <= self.lo:
            raise InvalidParameterError(f'grid requires hi > lo, got lo={self.lo!r} hi={self.hi!r}')
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f'grid count must be an integer >= 2, got {self.count!r}')
        if self.spacing == 'log' and self.lo <= 0.0:
            raise InvalidParameterError('log spacing requires lo > 0')

    @classmethod
    def figure_range(cls, count: int = 1001) -> GridSpec:
        """The 1e-5 <= t <= 1e5 range used for the approximation figures."""
        return cls(1e-5, 1e5, count, 'log')


@dataclass(frozen=True)
class EvalResult:
    """A function value with its estimated absolute error and the producing method."""

    value: float
    err_est: float
    method: Method
    converged: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f'unknown method tag {self.method!r}')
        if not math.isfinite(self.value):
            raise InvalidParameterError(f'{self.method} produced a non-finite value')
        if not (math.isfinite(self.err_est) and self.err_est >= 0.0):
            raise InvalidParameterError(f'{self.method} produced an invalid error estimate {self.err_est!r}')

    def meets(self, tol: Tolerance) -> bool:
        return self.err_est <= tol.bound(self.value)


@dataclass(frozen=True)
class SpectralPoint:
    abscissa: float
    density: float

    def __post_init__(self):
        if not self.abscissa > 0.0:
            raise DomainError(f'spectral abscissa must be > 0, got {self.abscissa!r}')
        if not self.density >= 0.0:
            raise InvalidParameterError(f'spectral density must be >= 0, got {self.density!r}')


@dataclass(frozen=True)
class BoundsReport:
    """Per-point record of g <= e <= f along a grid."""

    alpha: Alpha
    points: tuple[tuple[float, float, float, float], ...]
    violations_lower: int
    violations_upper: int
    worst_signed_gap: float
    skipped: tuple[float, ...] = ()

    def __post_init__(self):
        n = len(self.points)
        if not (0 <= self.violations_lower <= n and 0 <= self.violations_upper <= n):
            raise InvalidParameterError('violation counts cannot exceed the number of points')

    @property
    def violations(self) -> int:
        return self.violations_lower + self.violations_upper

    @property
    def ok(self) -> bool:
        """No violations, and every grid point was actually checked."""
        return self.violations == 0 and len(self.points) > 0 and not self.skipped


@dataclass(frozen=True)
class ValidityRange:
    """Sub-intervals of a grid on which an approximant stays within threshold."""

    approximant: Approximant
    threshold: float
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.approximant not in APPROXIMANTS:
            raise InvalidParameterError(f'unknown approximant {self.approximant!r}')
        previous_hi = -math.inf
        for lo, hi in self.intervals:
            if not (previous_hi < lo <= hi):
                raise InvalidParameterError('validity intervals must be disjoint and increasing')
            previous_hi = hi


@dataclass(frozen=True, eq=False)
class SolverRun:
    """Discrete fractional relaxation trajectory and its error against e_alpha."""

    alpha: Alpha
    scheme: Scheme
    h: float
    horizon: float
    times: np.ndarray
    values: np.ndarray
    max_abs_err: float
    max_abs_err_all: float
    error_from: float
    reference: np.ndarray = field(repr=False, default=None)
    reference_index: np.ndarray = field(repr=False, default=None)

    @property
    def trajectory(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))
