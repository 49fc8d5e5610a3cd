"""Real-line gamma machinery and grid construction."""
import math

import numpy as np
from scipy import special

from mlrelax.errors import GammaOverflowError, InvalidParameterError, PoleError
from mlrelax.models import GridSpec

POLE_TOLERANCE = 1e-12
LOG_MAX_FLOAT = 709.0


def _near_pole(x: float) -> bool:
    return x <= POLE_TOLERANCE and abs(x - round(x)) < POLE_TOLERANCE


def gamma_real(x: float) -> float:
    """Gamma function on the real line.

    Negative arguments go through the reflection formula inside scipy's
    cephes implementation; poles and overflow raise instead of returning inf.
    """
    x = float(x)
    if not math.isfinite(x):
        raise InvalidParameterError(f'gamma argument must be finite, got {x!r}')
    if _near_pole(x):
        raise PoleError(f'gamma has a pole at x={x!r}')
    value = float(special.gamma(x))
    if not math.isfinite(value):
        raise GammaOverflowError(f'gamma({x!r}) exceeds the double precision range')
    return value


def recip_gamma(x: float) -> float:
    """1/Gamma(x), total on the real line and exactly zero at the poles."""
    x = float(x)
    if not math.isfinite(x):
        raise InvalidParameterError(f'reciprocal gamma argument must be finite, got {x!r}')
    if _near_pole(x):
        return 0.0
    return float(special.rgamma(x))


def log_abs_gamma(x: float) -> float:
    return float(special.gammaln(x))


def reflection_product(alpha: float) -> float:
    """Gamma(1 - alpha) * Gamma(1 + alpha) = pi alpha / sin(pi alpha) for 0 < alpha < 1."""
    return math.pi * alpha / math.sin(math.pi * alpha)


def series_term(log_x: float, n: int, alpha: float) -> float:
    """Magnitude x**n / Gamma(alpha n + 1) built in the log domain."""
    if n == 0:
        return 1.0
    log_term = n * log_x - log_abs_gamma(alpha * n + 1.0)
    return math.exp(log_term) if log_term < LOG_MAX_FLOAT else math.inf


def make_grid(grid: GridSpec) -> np.ndarray:
    """Strictly increasing abscissae described by grid, endpoints exact."""
    if not isinstance(grid, GridSpec):
        raise InvalidParameterError(f'expected a GridSpec, got {type(grid).__name__}')
    if grid.spacing == 'log':
        points = np.geomspace(grid.lo, grid.hi, int(grid.count))
    else:
        points = np.linspace(grid.lo, grid.hi, int(grid.count))
    points[0] = grid.lo
    points[-1] = grid.hi
    if not np.all(np.diff(points) > 0.0):
        raise InvalidParameterError(f'grid {grid!r} is too dense to be strictly increasing in double precision')
    return points
