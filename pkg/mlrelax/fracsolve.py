"""Time stepping for fractional relaxation and discrete fractional operators.

The relaxation problem is solved in two equivalent forms: the Caputo form
D^alpha u = -u, and the Riemann-Liouville form du/dt = -D^(1-alpha) u, advanced
through its integrated Volterra equation u = u0 - I^alpha u. Both use implicit
Grunwald-Letnikov convolution weights and start from u(0) = 1.
"""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from mlrelax.core import gamma_real
from mlrelax.errors import InstabilityError, InvalidParameterError, NonUniformGridError
from mlrelax.mlfun import eval_grid
from mlrelax.models import SCHEMES, Alpha, Scheme, SolverRun, Tolerance

logger = logging.getLogger(__name__)

MAX_REFERENCE_NODES = 256
INITIAL_LAYER_NODES = 8
MONOTONE_SLACK = 1e-12
UNIFORM_RTOL = 1e-9


def gl_weights(order: float, count: int) -> np.ndarray:
    """Grunwald-Letnikov weights (-1)**j binom(order, j) for j < count.

    Negative orders give the weights of the fractional integral of that order.
    """
    weights = np.empty(count)
    weights[0] = 1.0
    for j in range(1, count):
        weights[j] = weights[j - 1] * (1.0 - (order + 1.0) / j)
    return weights


def _check_step(h: float, horizon: float) -> int:
    if not (math.isfinite(h) and math.isfinite(horizon) and h > 0.0 and horizon > 0.0):
        raise InvalidParameterError(f'step and horizon must be finite and > 0, got h={h!r}, horizon={horizon!r}')
    if h > horizon / 10.0:
        raise InvalidParameterError(f'step h={h!r} must not exceed horizon/10 = {horizon / 10.0!r}')
    return int(round(horizon / h))


def _step_caputo(a: float, h: float, n: int, u0: float) -> np.ndarray:
    # (1 + h^a) u_k = u0 - sum_{j=1..k} w_j (u_{k-j} - u0)
    w = gl_weights(a, n + 1)
    ha = h ** a
    u = np.empty(n + 1)
    v = np.zeros(n + 1)
    u[0] = u0
    for k in range(1, n + 1):
        memory = np.dot(w[1:k + 1], v[k - 1::-1])
        u[k] = (u0 - memory) / (1.0 + ha)
        v[k] = u[k] - u0
        _check_monotone(u, k, 'caputo_gl')
    return u


def _step_rl(a: float, h: float, n: int, u0: float) -> np.ndarray:
    # u = u0 - u0 t^a / Gamma(1 + a) - I^a (u - u0), the last integral by GL weights of order -a
    omega = gl_weights(-a, n + 1)
    ha = h ** a
    source = u0 / gamma_real(1.0 + a)
    u = np.empty(n + 1)
    v = np.zeros(n + 1)
    u[0] = u0
    for k in range(1, n + 1):
        memory = np.dot(omega[1:k + 1], v[k - 1::-1])
        u[k] = (u0 * (1.0 + ha) - source * (k * h) ** a - ha * memory) / (1.0 + ha)
        v[k] = u[k] - u0
        _check_monotone(u, k, 'rl_gl')
    return u


def _check_monotone(u: np.ndarray, k: int, scheme: str) -> None:
    if u[k] <= 0.0:
        raise InstabilityError(f'{scheme}: non-positive solution u[{k}]={u[k]:.6g}')
    if u[k] > u[k - 1] * (1.0 + MONOTONE_SLACK):
        raise InstabilityError(f'{scheme}: solution increases at step {k} ({u[k - 1]:.17g} -> {u[k]:.17g})')


def _reference_indices(times: np.ndarray, error_from: float) -> np.ndarray:
    window = np.flatnonzero(times >= error_from)
    if len(window) == 0:
        window = np.array([len(times) - 1])
    stride = max(1, math.ceil(len(window) / MAX_REFERENCE_NODES))
    picked = window[::stride]
    if picked[-1] != window[-1]:
        picked = np.append(picked, window[-1])
    return picked


def solve_relaxation(alpha: Alpha | float, h: float, horizon: float, scheme: Scheme = 'caputo_gl',
                     tol: Tolerance | None = None, error_from: float | None = None,
                     **dispatch) -> SolverRun:
    """March the relaxation problem on t_k = k h up to horizon and compare with e_alpha.

    max_abs_err is taken over the nodes with t >= error_from (default
    min(1, horizon/5)) where the scheme is first order; max_abs_err_all adds
    the initial layer, where the t**alpha start limits accuracy to O(h**alpha).
    """
    al = Alpha.coerce(alpha)
    if scheme not in SCHEMES:
        raise InvalidParameterError(f'unknown scheme {scheme!r}, expected one of {SCHEMES}')
    n = _check_step(h, horizon)
    if error_from is None:
        error_from = min(1.0, horizon / 5.0)

    step = _step_caputo if scheme == 'caputo_gl' else _step_rl
    values = step(al.value, h, n, 1.0)
    times = h * np.arange(n + 1)

    window = _reference_indices(times, error_from)
    initial = np.arange(1, min(INITIAL_LAYER_NODES, n) + 1)
    index = np.union1d(initial, window)
    reference = np.array([r.value for r in eval_grid(al, times[index], tol, **dispatch)])
    errors = np.abs(values[index] - reference)
    in_window = np.isin(index, window)
    max_err = float(np.max(errors[in_window]))
    max_err_all = float(np.max(errors))

    logger.info('%s alpha=%g h=%g horizon=%g: max error %.3e (t >= %g), %.3e overall',
                scheme, al.value, h, horizon, max_err, error_from, max_err_all)
    return SolverRun(al, scheme, h, float(times[-1]), times, values, max_err, max_err_all,
                     float(error_from), reference, index)


def convergence_study(alpha: Alpha | float, h_list: Sequence[float], horizon: float,
                      scheme: Scheme = 'caputo_gl', tol: Tolerance | None = None,
                      **dispatch) -> list[tuple[float, float, float]]:
    """Rows (h, max_abs_err, observed_order); the order compares each step with the previous one.

    The first row has no predecessor and reports nan.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise InvalidParameterError('convergence study needs at least 3 step sizes')
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise InvalidParameterError(f'step sizes must be strictly decreasing, got {h_list}')

    rows = []
    previous = None
    for h in h_list:
        err = solve_relaxation(alpha, h, horizon, scheme, tol, **dispatch).max_abs_err
        order = math.nan
        if previous is not None:
            h_prev, err_prev = previous
            order = math.log(err_prev / err) / math.log(h_prev / h)
            if err >= err_prev:
                logger.warning('error did not decrease from h=%g to h=%g (%.3e -> %.3e)', h_prev, h, err_prev, err)
        rows.append((h, err, order))
        previous = (h, err)
    return rows


def _uniform_samples(samples, mu: float, what: str) -> tuple[np.ndarray, np.ndarray, float]:
    if not (math.isfinite(mu) and 0.0 < mu < 1.0):
        raise InvalidParameterError(f'{what} order must lie in (0, 1), got {mu!r}')
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise InvalidParameterError(f'{what} needs at least 2 (t, f) samples')
    t, f = data[:, 0], data[:, 1]
    steps = np.diff(t)
    h = float(steps[0])
    if not h > 0.0 or not np.allclose(steps, h, rtol=UNIFORM_RTOL, atol=0.0):
        raise NonUniformGridError(f'{what} requires a uniform increasing grid')
    return t, f, h


def caputo_derivative_discrete(samples, mu: float) -> np.ndarray:
    """L1 product-integration Caputo derivative of order mu at t_1 .. t_{n-1}.

    The first sample is the lower terminal of the integral. Exact for
    piecewise-linear f.
    """
    _, f, h = _uniform_samples(samples, mu, 'caputo derivative')
    n = len(f)
    j = np.arange(n - 1, dtype=float)
    b = (j + 1.0) ** (1.0 - mu) - j ** (1.0 - mu)
    df = np.diff(f)
    scale = h ** -mu / gamma_real(2.0 - mu)
    return np.array([scale * np.dot(b[:k], df[k - 1::-1]) for k in range(1, n)])


def fractional_integral_discrete(samples, nu: float) -> np.ndarray:
    """Product-trapezoid fractional integral of order nu at every node; zero at the first."""
    _, f, h = _uniform_samples(samples, nu, 'fractional integral')
    n = len(f)
    p = np.arange(n + 1, dtype=float) ** (nu + 1.0)
    # weights for interior nodes, indexed by the lag m = k - j
    c = np.zeros(n)
    c[1:] = p[2:n + 1] - 2.0 * p[1:n] + p[0:n - 1]
    scale = h ** nu / gamma_real(nu + 2.0)
    out = np.zeros(n)
    for k in range(1, n):
        first = (k - 1.0) ** (nu + 1.0) - (k - nu - 1.0) * k ** nu
        interior = np.dot(c[1:k], f[k - 1:0:-1]) if k > 1 else 0.0
        out[k] = scale * (first * f[0] + interior + f[k])
    return out


def rl_derivative_discrete(samples, mu: float) -> np.ndarray:
    """Riemann-Liouville derivative of order mu at t_1 .. t_{n-1}.

    Backward difference of the product-integrated I^(1 - mu) f.
    """
    t, f, h = _uniform_samples(samples, mu, 'RL derivative')
    integral = fractional_integral_discrete(np.column_stack((t, f)), 1.0 - mu)
    return np.diff(integral) / h
