"""Frequency and relaxation-time spectra of e_alpha(t) = E_alpha(-t**alpha).

Both spectral integrals are evaluated after the substitution u = r**alpha,
which turns K_alpha(r) dr into sin(alpha pi)/(alpha pi) du / (u**2 + 2 u cos(alpha pi) + 1)
and removes the r**(alpha - 1) endpoint singularity.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import quad

from mlrelax.core import gamma_real, make_grid
from mlrelax.errors import DomainError, QuadratureError
from mlrelax.models import Alpha, GridSpec, SpectralPoint, Tolerance

logger = logging.getLogger(__name__)

QUAD_LIMIT = 200
NORMALIZATION_TOL_NEAR_DEGENERATE = 1e-5
# quad refuses relative targets below 50 machine epsilons
MIN_QUAD_EPSREL = 1e-14


def _density(a: float, x):
    """(1/pi) x**(a-1) sin(a pi) / (x**(2a) + 2 x**a cos(a pi) + 1)."""
    xa = np.power(x, a)
    return np.sin(a * math.pi) * np.power(x, a - 1.0) / (xa * xa + 2.0 * xa * math.cos(a * math.pi) + 1.0) / math.pi


def _positive(values, name: str):
    array = np.asarray(values, dtype=float)
    if not np.all(array > 0.0):
        raise DomainError(f'{name} must be > 0')
    return array


def _scalar_or_array(result, like):
    return float(result) if np.ndim(like) == 0 else result


def kernel_freq(alpha: Alpha | float, r):
    """Frequency spectrum K_alpha(r) >= 0."""
    a = Alpha.coerce(alpha).require_fractional('kernel_freq')
    rr = _positive(r, 'frequency r')
    return _scalar_or_array(_density(a, rr), r)


def kernel_time(alpha: Alpha | float, tau):
    """Relaxation-time spectrum via H_alpha(tau) = tau**-2 K_alpha(1/tau)."""
    a = Alpha.coerce(alpha).require_fractional('kernel_time')
    tt = _positive(tau, 'relaxation time tau')
    return _scalar_or_array(_density(a, 1.0 / tt) / (tt * tt), tau)


def kernel_time_closed(alpha: Alpha | float, tau):
    """Closed form of H_alpha(tau); the same expression as K_alpha with r replaced by tau."""
    a = Alpha.coerce(alpha).require_fractional('kernel_time_closed')
    tt = _positive(tau, 'relaxation time tau')
    return _scalar_or_array(_density(a, tt), tau)


def kernel_peak(alpha: Alpha | float) -> float:
    """Abscissa minimising the kernel denominator, or 1 when cos(alpha pi) >= 0."""
    a = Alpha.coerce(alpha).require_fractional('kernel_peak')
    c = math.cos(a * math.pi)
    if c < 0.0:
        return (-c) ** (1.0 / a)
    return 1.0


def _u_peak(a: float) -> float:
    c = math.cos(a * math.pi)
    return -c if c < 0.0 else 1.0


def _quad(func, lo, hi, epsabs, epsrel, what):
    result = quad(func, lo, hi, epsabs=epsabs, epsrel=max(epsrel, MIN_QUAD_EPSREL), limit=QUAD_LIMIT, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3:
        logger.warning('%s: quadrature on [%g, %g] reported: %s', what, lo, hi, result[3].splitlines()[0])
    return value, abserr


def _integrate_segments(func, breakpoints, epsabs, epsrel, what):
    total, err = 0.0, 0.0
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        value, abserr = _quad(func, lo, hi, epsabs, epsrel, what)
        total += value
        err += abserr
    return total, err


def _check(total, err, tol: Tolerance, what):
    if not math.isfinite(total) or err > 10.0 * tol.bound(total):
        raise QuadratureError(f'{what}: error estimate {err:.3e} misses 10*tol for value {total:.17g}')


def _peak_breakpoints(center, width, lo, hi):
    points = {center}
    if width > 0.0:
        points.update((center - 2.0 * width, center - width, center + width, center + 2.0 * width))
    return {p for p in points if lo < p < hi}


def kernel_normalization(alpha: Alpha | float, tol: Tolerance | None = None) -> float:
    """Integral of K_alpha over (0, inf); equals 1 because e_alpha(0) = 1."""
    al = Alpha.coerce(alpha)
    a = al.require_fractional('kernel_normalization')
    tol = tol or Tolerance()
    if al.near_degenerate:
        tol = tol.relaxed(NORMALIZATION_TOL_NEAR_DEGENERATE)
    c = math.cos(a * math.pi)
    s = math.sin(a * math.pi)
    prefactor = s / (a * math.pi)

    def integrand(u):
        return prefactor / (u * u + 2.0 * c * u + 1.0)

    peak = _u_peak(a)
    inner = sorted(_peak_breakpoints(peak, s * peak, 0.0, math.inf))
    finite, err = _integrate_segments(integrand, [0.0] + inner, tol.abs, 0.1 * tol.rel, 'kernel_normalization')
    tail, tail_err = _quad(integrand, inner[-1], math.inf, tol.abs, 0.1 * tol.rel, 'kernel_normalization')
    total = finite + tail
    _check(total, err + tail_err, tol, 'kernel_normalization')
    logger.debug('kernel normalization for alpha=%g: %.17g (+/- %.2e)', a, total, err + tail_err)
    return total


def laplace_of_kernel(alpha: Alpha | float, t: float, tol: Tolerance) -> tuple[float, float]:
    """Integral of exp(-r t) K_alpha(r) dr over (0, inf) for t > 0, with its error estimate.

    With x = t**alpha and v = x u the integrand becomes
    x exp(-v**(1/alpha)) / (v**2 + 2 x v cos(alpha pi) + x**2), smooth on [0, inf).
    The tail is cut where exp(-v**(1/alpha)) drops below 1e-3 tol.rel sin(alpha pi)**2.
    """
    a = Alpha.coerce(alpha).require_fractional('laplace_of_kernel')
    if not t > 0.0:
        raise DomainError(f'laplace_of_kernel requires t > 0, got {t!r}')
    x = t ** a
    c = math.cos(a * math.pi)
    s = math.sin(a * math.pi)
    prefactor = s / (a * math.pi)
    inv_a = 1.0 / a

    def integrand(v):
        return prefactor * x * math.exp(-v ** inv_a) / (v * v + 2.0 * c * x * v + x * x)

    tail_eps = max(1e-3 * tol.rel * s * s, 1e-300)
    v_max = math.log(1.0 / tail_eps) ** a
    peak = x * _u_peak(a)
    points = {1.0} | _peak_breakpoints(peak, s * peak, 0.0, v_max)
    points = {p for p in points if 0.0 < p < v_max}
    breakpoints = [0.0] + sorted(points) + [v_max]

    # g_alpha(t) is a lower bound for e_alpha(t); it sets the absolute target.
    lower = 1.0 / (1.0 + x * gamma_real(1.0 - a))
    epsabs = 0.1 * tol.rel * lower / len(breakpoints) + tol.abs
    total, err = _integrate_segments(integrand, breakpoints, epsabs, 0.1 * tol.rel, 'eval_spectral')
    _check(total, err, tol, 'eval_spectral')
    return total, err


def time_spectrum_integral(alpha: Alpha | float, t: float, tol: Tolerance) -> tuple[float, float]:
    """Integral of exp(-t/tau) H_alpha(tau) dtau over (0, inf) for t > 0.

    Substituting w = tau**alpha and y = w / t**alpha gives
    x exp(-y**(-1/alpha)) / (x**2 y**2 + 2 x y cos(alpha pi) + 1) with an algebraic tail.
    """
    a = Alpha.coerce(alpha).require_fractional('time_spectrum_integral')
    if not t > 0.0:
        raise DomainError(f'time_spectrum_integral requires t > 0, got {t!r}')
    x = t ** a
    c = math.cos(a * math.pi)
    s = math.sin(a * math.pi)
    prefactor = s / (a * math.pi)
    inv_a = 1.0 / a

    def integrand(y):
        if y <= 0.0:
            return 0.0
        log_rate = -inv_a * math.log(y)
        if log_rate > 700.0:
            return 0.0
        return prefactor * x * math.exp(-math.exp(log_rate)) / (x * x * y * y + 2.0 * c * x * y + 1.0)

    peak = _u_peak(a) / x
    points = sorted({1.0} | _peak_breakpoints(peak, s * peak, 0.0, math.inf))
    lower = 1.0 / (1.0 + x * gamma_real(1.0 - a))
    epsabs = 0.1 * tol.rel * lower / (len(points) + 1) + tol.abs
    finite, err = _integrate_segments(integrand, [0.0] + points, epsabs, 0.1 * tol.rel, 'eval_time_spectral')
    tail, tail_err = _quad(integrand, points[-1], math.inf, epsabs, 0.1 * tol.rel, 'eval_time_spectral')
    total = finite + tail
    _check(total, err + tail_err, tol, 'eval_time_spectral')
    return total, err + tail_err


def spectrum_points(alpha: Alpha | float, grid: GridSpec, domain: str = 'freq') -> list[SpectralPoint]:
    """Tabulate K_alpha (domain='freq') or H_alpha (domain='time') on a grid of positive abscissae."""
    if domain not in ('freq', 'time'):
        raise DomainError(f"spectrum domain must be 'freq' or 'time', got {domain!r}")
    abscissae = make_grid(grid)
    if abscissae[0] <= 0.0:
        raise DomainError('spectral abscissae must be > 0')
    densities = kernel_freq(alpha, abscissae) if domain == 'freq' else kernel_time(alpha, abscissae)
    return [SpectralPoint(float(x), float(d)) for x, d in zip(abscissae, densities)]


def scaling_identity_gap(alpha: Alpha | float, grid: GridSpec) -> float:
    """Largest relative gap between tau**-2 K(1/tau) and the closed form of H over the grid."""
    taus = make_grid(grid)
    transformed = kernel_time(alpha, taus)
    closed = kernel_time_closed(alpha, taus)
    return float(np.max(np.abs(transformed - closed) / closed))
