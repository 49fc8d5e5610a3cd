"""Evaluation of the relaxation function e_alpha(t) = E_alpha(-t**alpha).

Three independent evaluators (convergent power series, optimally truncated
asymptotic series, spectral quadrature) and a dispatcher that picks one per
point according to x = t**alpha.
"""
from __future__ import annotations

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from mlrelax import spectra
from mlrelax.core import make_grid, recip_gamma, series_term
from mlrelax.errors import (
    DivergenceError,
    DomainError,
    MLRelaxError,
    NoConvergenceError,
    QuadratureError,
)
from mlrelax.models import Alpha, EvalResult, GridSpec, Tolerance

logger = logging.getLogger(__name__)

EPS = sys.float_info.epsilon
MAX_SERIES_TERMS = 10_000
MAX_ASYMPTOTIC_TERMS = 100
DEFAULT_SERIES_MAX_X = 1.0
DEFAULT_ASYMPTOTIC_MIN_X = 15.0
# Fraction of tol.rel the asymptotic err_est must reach before the dispatcher trusts it;
# the smallest-term estimate is only right to within its order of magnitude.
ASYMPTOTIC_SAFETY = 0.01
LOG_OVERFLOW = 700.0


def _check_t(t: float, strict: bool = False) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0.0 or (strict and t == 0.0):
        bound = '> 0' if strict else '>= 0'
        raise DomainError(f't must be finite and {bound}, got {t!r}')
    return t


def eval_series(alpha: Alpha | float, t: float, tol: Tolerance | None = None,
                max_terms: int = MAX_SERIES_TERMS) -> EvalResult:
    """Partial sum of sum_n (-1)**n t**(alpha n) / Gamma(alpha n + 1).

    Stops once the next term drops below tol.rel |sum| + tol.abs. The error
    estimate is the first omitted term plus a bound on the rounding caused by
    cancellation between terms.
    """
    a = Alpha.coerce(alpha).value
    t = _check_t(t)
    tol = tol or Tolerance()
    if t == 0.0:
        return EvalResult(1.0, 0.0, 'series')

    log_x = a * math.log(t)
    terms = [1.0]
    partial = 1.0
    abs_sum = 1.0
    for n in range(1, max_terms + 1):
        magnitude = series_term(log_x, n, a)
        if not math.isfinite(magnitude):
            raise NoConvergenceError(f'series terms overflow at n={n} for alpha={a}, t={t}')
        if magnitude < tol.bound(partial):
            value = math.fsum(terms)
            rounding = 16.0 * EPS * abs_sum
            if rounding >= abs(value):
                raise NoConvergenceError(
                    f'series cancellation leaves no correct digits for alpha={a}, t={t} '
                    f'(term sum {abs_sum:.3e}, value {value:.3e})')
            err_est = magnitude + rounding
            return EvalResult(value, err_est, 'series', converged=err_est <= tol.bound(value))
        signed = -magnitude if n % 2 else magnitude
        terms.append(signed)
        partial += signed
        abs_sum += magnitude
    raise NoConvergenceError(f'series did not converge within {max_terms} terms for alpha={a}, t={t}')


def eval_asymptotic(alpha: Alpha | float, t: float, tol: Tolerance | None = None,
                    max_terms: int = MAX_ASYMPTOTIC_TERMS) -> EvalResult:
    """Optimally truncated sum_n (-1)**(n-1) t**(-alpha n) / Gamma(1 - alpha n).

    Terms are taken while their magnitudes strictly decrease; the smallest one
    is left out and becomes the error estimate. Terms whose 1/Gamma vanishes
    are skipped. With tol given, a result that cannot reach it raises
    DivergenceError.
    """
    al = Alpha.coerce(alpha)
    a = al.require_fractional('eval_asymptotic')
    t = _check_t(t, strict=True)
    log_x = a * math.log(t)

    kept: list[float] = []
    previous = math.inf
    omitted = None
    for n in range(1, max_terms + 2):
        rg = recip_gamma(1.0 - a * n)
        if rg == 0.0:
            continue
        log_mag = -n * log_x + math.log(abs(rg))
        magnitude = math.exp(log_mag) if log_mag < LOG_OVERFLOW else math.inf
        if n == 1 and magnitude > 1.0:
            raise DivergenceError(
                f'asymptotic series diverges at t={t} for alpha={a}: first term {magnitude:.3e} exceeds 1')
        if magnitude >= previous or n > max_terms:
            omitted = magnitude
            break
        sign = 1.0 if n % 2 else -1.0
        kept.append(sign * math.copysign(magnitude, rg))
        previous = magnitude

    if omitted is None or not math.isfinite(omitted):
        omitted = previous
    if omitted >= previous:
        # the last kept term is the smallest one; it moves to the error estimate
        smallest = kept.pop()
        omitted = abs(smallest)
    if not kept:
        raise DivergenceError(f'asymptotic series has no decreasing terms at t={t} for alpha={a}')
    value = math.fsum(kept)
    result = EvalResult(value, omitted, 'asymptotic')
    if tol is not None and not result.meets(tol):
        raise DivergenceError(
            f't={t} is too small for the asymptotic regime at alpha={a}: '
            f'error estimate {omitted:.3e} misses tolerance for value {value:.6g}')
    return result


def eval_spectral(alpha: Alpha | float, t: float, tol: Tolerance | None = None) -> EvalResult:
    """Quadrature of exp(-r t) K_alpha(r) over (0, inf), split at the kernel peak."""
    Alpha.coerce(alpha).require_fractional('eval_spectral')
    t = _check_t(t)
    tol = tol or Tolerance()
    if t == 0.0:
        return EvalResult(1.0, 0.0, 'spectral')
    value, err = spectra.laplace_of_kernel(alpha, t, tol)
    return EvalResult(value, err, 'spectral')


def eval_time_spectral(alpha: Alpha | float, t: float, tol: Tolerance | None = None) -> EvalResult:
    """Quadrature of exp(-t/tau) H_alpha(tau) over relaxation times tau."""
    Alpha.coerce(alpha).require_fractional('eval_time_spectral')
    t = _check_t(t)
    tol = tol or Tolerance()
    if t == 0.0:
        return EvalResult(1.0, 0.0, 'spectral')
    value, err = spectra.time_spectrum_integral(alpha, t, tol)
    return EvalResult(value, err, 'spectral')


def _candidates(x: float, series_max_x: float, asymptotic_min_x: float) -> tuple[str, ...]:
    if x <= series_max_x:
        return ('series', 'spectral')
    if x >= asymptotic_min_x:
        return ('asymptotic', 'spectral')
    return ('spectral', 'series')


def eval_auto(alpha: Alpha | float, t: float, tol: Tolerance | None = None,
              series_max_x: float = DEFAULT_SERIES_MAX_X,
              asymptotic_min_x: float = DEFAULT_ASYMPTOTIC_MIN_X) -> EvalResult:
    """Evaluate e_alpha(t) with the method suited to x = t**alpha.

    Series below series_max_x, asymptotic above asymptotic_min_x when its error
    estimate is good enough, spectral quadrature in between and as fallback.
    A result that misses tol is returned with converged=False.
    """
    al = Alpha.coerce(alpha)
    t = _check_t(t)
    tol = tol or Tolerance()
    if al.is_exponential:
        value = math.exp(-t)
        return EvalResult(value, EPS * value, 'exponential')
    if t == 0.0:
        return EvalResult(1.0, 0.0, 'series')

    x = t ** al.value
    errors: list[MLRelaxError] = []
    best = None
    for method in _candidates(x, series_max_x, asymptotic_min_x):
        try:
            if method == 'series':
                result = eval_series(al, t, tol)
            elif method == 'asymptotic':
                result = eval_asymptotic(al, t)
                if result.err_est > ASYMPTOTIC_SAFETY * tol.rel * abs(result.value) + tol.abs:
                    logger.debug('asymptotic estimate %.2e too coarse at t=%g, alpha=%g', result.err_est, t, al.value)
                    best = best or result
                    continue
            else:
                result = eval_spectral(al, t, tol)
        except (NoConvergenceError, DivergenceError, QuadratureError) as exc:
            logger.debug('%s failed at t=%g, alpha=%g: %s', method, t, al.value, exc)
            errors.append(exc)
            continue
        if result.meets(tol):
            return _clipped(result)
        if best is None or result.err_est < best.err_est:
            best = result

    if best is None:
        raise errors[-1]
    logger.warning('e_alpha(%g) for alpha=%g misses tolerance: err_est %.2e via %s',
                   t, al.value, best.err_est, best.method)
    return _clipped(EvalResult(best.value, best.err_est, best.method, converged=False))


def _clipped(result: EvalResult) -> EvalResult:
    if result.value > 1.0:
        return EvalResult(1.0, result.err_est, result.method, result.converged)
    return result


def eval_grid(alpha: Alpha | float, ts: Iterable[float], tol: Tolerance | None = None,
              workers: int = 1, **dispatch) -> list[EvalResult]:
    """eval_auto over many points; results come back in input order."""
    ts = [float(t) for t in ts]

    def one(t):
        return eval_auto(alpha, t, tol, **dispatch)

    if workers <= 1 or len(ts) < 2:
        return [one(t) for t in ts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, ts))


def laplace_check(alpha: Alpha | float, s: float, tol: Tolerance | None = None,
                  **dispatch) -> tuple[float, float]:
    """Numerical Laplace transform of e_alpha at real s > 0 against s**(alpha-1)/(s**alpha + 1).

    The outer integral runs in w = t**alpha, where e_alpha is a smooth function of w.
    """
    al = Alpha.coerce(alpha)
    a = al.value
    s = float(s)
    if not (math.isfinite(s) and s > 0.0):
        raise DomainError(f'laplace_check requires s > 0, got {s!r}')
    tol = tol or Tolerance()
    rhs = s ** (a - 1.0) / (s ** a + 1.0)

    inv_a = 1.0 / a
    outer = Tolerance(rel=min(max(10.0 * tol.rel, 1e-9), 1e-2), abs=tol.abs)

    def integrand(w):
        if w <= 0.0:
            return 0.0 if inv_a > 1.0 else inv_a
        t = w ** inv_a
        return math.exp(-s * t) * eval_auto(al, t, tol, **dispatch).value * inv_a * w ** (inv_a - 1.0)

    t_max = math.log(1.0 / (1e-3 * outer.rel)) / s
    breakpoints = [0.0, (1.0 / s) ** a, t_max ** a]
    lhs, err = 0.0, 0.0
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        result = quad(integrand, lo, hi, epsabs=0.1 * outer.rel * rhs, epsrel=outer.rel, limit=200, full_output=1)
        if len(result) > 3:
            logger.warning('laplace_check on [%g, %g]: %s', lo, hi, result[3].splitlines()[0])
        lhs += result[0]
        err += result[1]
    if not math.isfinite(lhs) or err > 10.0 * outer.bound(lhs):
        raise QuadratureError(f'laplace_check: error estimate {err:.3e} misses tolerance for lhs={lhs:.17g}')
    logger.debug('laplace check alpha=%g s=%g: lhs=%.17g rhs=%.17g', a, s, lhs, rhs)
    return lhs, rhs


def divided_differences(ts: np.ndarray, values: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Divided differences of the given order on consecutive windows, with their coefficient sums.

    Returns (diffs, weights) where weights[i] = sum_j 1/|prod_{m != j}(t_j - t_m)| over the
    window, used to propagate pointwise errors.
    """
    n = len(ts) - order
    diffs = np.empty(n)
    weights = np.empty(n)
    for i in range(n):
        window = ts[i:i + order + 1]
        denom = np.array([np.prod([window[j] - window[m] for m in range(order + 1) if m != j])
                          for j in range(order + 1)])
        diffs[i] = np.sum(values[i:i + order + 1] / denom)
        weights[i] = np.sum(1.0 / np.abs(denom))
    return diffs, weights


def cm_sign_check(alpha: Alpha | float, grid: GridSpec, orders: Sequence[int] = (1, 2, 3, 4),
                  tol: Tolerance | None = None, noise_factor: float = 100.0,
                  **dispatch) -> dict[int, tuple[int, int]]:
    """Sign test (-1)**k f[t_i..t_{i+k}] >= 0 of complete monotonicity on a grid.

    Divided differences equal f^(k)(xi)/k! for some xi in the window, so the
    signs must alternate for a completely monotone function. Windows whose
    difference is within noise_factor times the propagated error are skipped.
    Returns {order: (checked, violations)}.
    """
    ts = make_grid(grid)
    results = eval_grid(alpha, ts, tol, **dispatch)
    values = np.array([r.value for r in results])
    errs = np.array([r.err_est for r in results])
    report = {}
    for k in orders:
        diffs, _ = divided_differences(ts, values, k)
        noise = np.array([
            _propagated_noise(ts[i:i + k + 1], errs[i:i + k + 1]) for i in range(len(diffs))
        ])
        checked = np.abs(diffs) > noise_factor * noise
        signed = (-1.0) ** k * diffs
        violations = int(np.count_nonzero(checked & (signed < 0.0)))
        report[k] = (int(np.count_nonzero(checked)), violations)
        if violations:
            logger.warning('alpha=%s: %d sign violations at order %d', alpha, violations, k)
    return report


def _propagated_noise(window: np.ndarray, errs: np.ndarray) -> float:
    k = len(window)
    total = 0.0
    for j in range(k):
        prod = np.prod([window[j] - window[m] for m in range(k) if m != j])
        total += errs[j] / abs(prod)
    return float(total)
