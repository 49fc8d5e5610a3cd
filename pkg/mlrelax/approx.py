"""Approximants of e_alpha(t) and the checks built on them.

Two families: the stretched exponential / power law pair that captures the
small and large time behaviour, and the rational [0/1] Pade forms f_alpha
(small t) and g_alpha (large t) that bracket e_alpha from above and below.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Literal

import numpy as np
from scipy.optimize import bisect

from mlrelax.core import gamma_real, make_grid, reflection_product
from mlrelax.errors import DomainError, InvalidParameterError, MLRelaxError
from mlrelax.mlfun import eval_auto, eval_grid, eval_series
from mlrelax.models import (
    APPROXIMANTS,
    Alpha,
    Approximant,
    BoundsReport,
    EvalResult,
    GridSpec,
    Tolerance,
    ValidityRange,
)

logger = logging.getLogger(__name__)

Orientation = Literal['approx_minus_exact', 'exact_minus_approx']
Family = Literal['stretched_power', 'pade']

DEFAULT_THRESHOLD = 0.01
# 3 significant digits on a log10 scale
ENDPOINT_XTOL = math.log(1.0005)
CROSSING_XTOL = 1e-6
GF_TOLERANCE = 1e-15
# figure rows resolve errors far below the default evaluation tolerance
FIGURE_SERIES_TOL = Tolerance(rel=1e-15)


def _nonnegative_t(t: float) -> float:
    t = float(t)
    if not (math.isfinite(t) and t >= 0.0):
        raise DomainError(f't must be finite and >= 0, got {t!r}')
    return t


def stretched_exp(alpha: Alpha | float, t: float) -> float:
    """e0(t) = exp(-t**alpha / Gamma(1 + alpha)), the small-t surrogate."""
    a = Alpha.coerce(alpha).value
    t = _nonnegative_t(t)
    return math.exp(-t ** a / gamma_real(1.0 + a))


def power_law(alpha: Alpha | float, t: float) -> float:
    """einf(t) = t**-alpha / Gamma(1 - alpha), the large-t surrogate."""
    a = Alpha.coerce(alpha).require_fractional('power_law')
    t = _nonnegative_t(t)
    if t == 0.0:
        raise DomainError('power_law diverges at t=0')
    return t ** -a / gamma_real(1.0 - a)


def pade_small(alpha: Alpha | float, t: float) -> float:
    """f(t) = 1 / (1 + t**alpha / Gamma(1 + alpha))."""
    a = Alpha.coerce(alpha).value
    t = _nonnegative_t(t)
    return 1.0 / (1.0 + t ** a / gamma_real(1.0 + a))


def pade_large(alpha: Alpha | float, t: float) -> float:
    """g(t) = 1 / (1 + t**alpha Gamma(1 - alpha))."""
    a = Alpha.coerce(alpha).require_fractional('pade_large')
    t = _nonnegative_t(t)
    return 1.0 / (1.0 + t ** a * gamma_real(1.0 - a))


APPROXIMANT_FUNCTIONS: dict[str, Callable[[Alpha | float, float], float]] = {
    'stretched_exp': stretched_exp,
    'power_law': power_law,
    'pade_small': pade_small,
    'pade_large': pade_large,
}


def _exact_value(exact: EvalResult | float) -> float:
    value = exact.value if isinstance(exact, EvalResult) else float(exact)
    if not value > 0.0:
        raise ZeroDivisionError(f'relative error needs a positive exact value, got {value!r}')
    return value


def rel_error_abs(approx_value: float, exact: EvalResult | float) -> float:
    value = _exact_value(exact)
    return abs(approx_value - value) / value


def rel_error_signed(approx_value: float, exact: EvalResult | float,
                     orientation: Orientation = 'approx_minus_exact') -> float:
    """Signed relative error; (f - e)/e for 'approx_minus_exact', (e - g)/e for the other."""
    value = _exact_value(exact)
    if orientation == 'approx_minus_exact':
        return (approx_value - value) / value
    if orientation == 'exact_minus_approx':
        return (value - approx_value) / value
    raise InvalidParameterError(f'unknown orientation {orientation!r}')


def _positive_grid(grid: GridSpec) -> np.ndarray:
    ts = make_grid(grid)
    if ts[0] <= 0.0:
        raise DomainError('grid must lie in t > 0')
    return ts


def _refine_log(func: Callable[[float], float], t_lo: float, t_hi: float, xtol: float) -> float:
    """Root of func between t_lo and t_hi found by bisection in log t."""
    root = bisect(lambda s: func(math.exp(s)), math.log(t_lo), math.log(t_hi), xtol=xtol)
    return math.exp(root)


def validity_ranges(alpha: Alpha | float, approximant: Approximant, grid: GridSpec,
                    threshold: float = DEFAULT_THRESHOLD, tol: Tolerance | None = None,
                    workers: int = 1, **dispatch) -> ValidityRange:
    """Maximal sub-intervals of the grid where the approximant stays within threshold.

    Errors use the absolute-value convention for every approximant. Interior
    endpoints are refined by bisection to three significant digits; endpoints on
    the grid boundary stay there.
    """
    if approximant not in APPROXIMANTS:
        raise InvalidParameterError(f'unknown approximant {approximant!r}, expected one of {APPROXIMANTS}')
    if not threshold > 0.0:
        raise InvalidParameterError(f'threshold must be > 0, got {threshold!r}')
    al = Alpha.coerce(alpha)
    approx = APPROXIMANT_FUNCTIONS[approximant]
    ts = _positive_grid(grid)
    exact = eval_grid(al, ts, tol, workers=workers, **dispatch)
    inside = np.array([rel_error_abs(approx(al, t), e) <= threshold for t, e in zip(ts, exact)])

    def excess(t):
        return rel_error_abs(approx(al, t), eval_auto(al, t, tol, **dispatch)) - threshold

    intervals = []
    n = len(ts)
    i = 0
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        lo = ts[i] if i == 0 else _refine_log(excess, ts[i - 1], ts[i], ENDPOINT_XTOL)
        hi = ts[j] if j == n - 1 else _refine_log(excess, ts[j], ts[j + 1], ENDPOINT_XTOL)
        intervals.append((float(lo), float(hi)))
        i = j + 1
    logger.debug('%s validity for alpha=%g at %g: %s', approximant, al.value, threshold, intervals)
    return ValidityRange(approximant, threshold, tuple(intervals))


def crossing_points(alpha: Alpha | float, grid: GridSpec, tol: Tolerance | None = None,
                    **dispatch) -> list[float]:
    """Abscissae where einf(t) - e(t) changes sign, refined to 1e-6 relative."""
    al = Alpha.coerce(alpha)
    ts = _positive_grid(grid)

    def gap(t):
        return power_law(al, t) - eval_auto(al, t, tol, **dispatch).value

    values = np.array([gap(t) for t in ts])
    crossings = []
    for k in range(len(ts) - 1):
        if values[k] == 0.0:
            crossings.append(float(ts[k]))
        elif values[k] * values[k + 1] < 0.0:
            crossings.append(_refine_log(gap, ts[k], ts[k + 1], CROSSING_XTOL))
    if values[-1] == 0.0:
        crossings.append(float(ts[-1]))
    return crossings


def check_gf_inequality(alpha: Alpha | float, grid: GridSpec) -> float:
    """Largest g(t) - f(t) over the grid; never positive beyond rounding.

    g <= f follows from Gamma(1 - alpha) Gamma(1 + alpha) = pi alpha / sin(pi alpha) >= 1.
    """
    al = Alpha.coerce(alpha)
    a = al.require_fractional('check_gf_inequality')
    ts = make_grid(grid)
    gaps = [pade_large(al, t) - pade_small(al, t) for t in ts]
    worst = float(max(gaps))
    if worst > GF_TOLERANCE:
        logger.warning('g <= f broken for alpha=%g: worst gap %.3e (reflection product %.17g)',
                       a, worst, reflection_product(a))
    return worst


def bounds_scan(alpha: Alpha | float, grid: GridSpec, tol: Tolerance | None = None,
                workers: int = 1, **dispatch) -> BoundsReport:
    """Check g(t) <= e(t) <= f(t) at every grid point.

    A violation must exceed tol.abs plus the evaluator's error estimate. Points
    where e cannot be evaluated are skipped and listed in the report.
    """
    al = Alpha.coerce(alpha)
    al.require_fractional('bounds_scan')
    tol = tol or Tolerance()
    ts = make_grid(grid)

    def one(t):
        try:
            return eval_auto(al, t, tol, **dispatch)
        except MLRelaxError as exc:
            logger.warning('bounds scan alpha=%g: skipping t=%g: %s', al.value, t, exc)
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, ts))
    else:
        results = [one(t) for t in ts]

    points, skipped = [], []
    lower = upper = 0
    worst = -math.inf
    for t, result in zip(ts, results):
        t = float(t)
        if result is None:
            skipped.append(t)
            continue
        g, e, f = pade_large(al, t), result.value, pade_small(al, t)
        slack = tol.abs + result.err_est
        if g > e + slack:
            lower += 1
        if e > f + slack:
            upper += 1
        worst = max(worst, g - e, e - f)
        points.append((t, g, e, f))

    report = BoundsReport(al, tuple(points), lower, upper, worst, tuple(skipped))
    if report.ok:
        logger.info('alpha=%g: g <= e <= f holds at %d points (worst gap %.3e)', al.value, len(points), worst)
    else:
        logger.warning('alpha=%g: %d lower and %d upper bound violations, %d of %d points unchecked '
                       '(worst gap %.3e)', al.value, lower, upper, len(skipped), len(ts), worst)
    return report


def asymptotic_inequality(alpha: Alpha | float, grid: GridSpec) -> list[tuple[float, float]]:
    """Rows (t, e0(t) - einf(t)); negative where the stretched exponential sits below the power law."""
    al = Alpha.coerce(alpha)
    return [(float(t), stretched_exp(al, t) - power_law(al, t)) for t in _positive_grid(grid)]


def _figure_reference(al: Alpha, ts: np.ndarray, tol: Tolerance | None, workers: int,
                      **dispatch) -> list[EvalResult]:
    """e at every grid point, with series-range points summed down to rounding level.

    At small t the approximation errors fall below any practical evaluation
    tolerance, so the series there must not stop early.
    """
    exact = eval_grid(al, ts, tol, workers=workers, **dispatch)
    return [eval_series(al, t, FIGURE_SERIES_TOL) if e.method == 'series' else e
            for t, e in zip(ts, exact)]


def fig_rows(alpha: Alpha | float, grid: GridSpec, family: Family = 'stretched_power',
             tol: Tolerance | None = None, workers: int = 1, **dispatch) -> list[tuple[float, ...]]:
    """Data rows behind the approximation plots.

    'stretched_power' gives (t, e, e0, einf, |e0 - e|/e, |einf - e|/e);
    'pade' gives (t, e, f, g, (f - e)/e, (e - g)/e).
    """
    if family not in ('stretched_power', 'pade'):
        raise InvalidParameterError(f"family must be 'stretched_power' or 'pade', got {family!r}")
    al = Alpha.coerce(alpha)
    ts = _positive_grid(grid)
    exact = _figure_reference(al, ts, tol, workers, **dispatch)
    rows = []
    for t, e in zip(ts, exact):
        t = float(t)
        if family == 'stretched_power':
            e0, einf = stretched_exp(al, t), power_law(al, t)
            rows.append((t, e.value, e0, einf, rel_error_abs(e0, e), rel_error_abs(einf, e)))
        else:
            f, g = pade_small(al, t), pade_large(al, t)
            rows.append((t, e.value, f, g,
                         rel_error_signed(f, e, 'approx_minus_exact'),
                         rel_error_signed(g, e, 'exact_minus_approx')))
    return rows
