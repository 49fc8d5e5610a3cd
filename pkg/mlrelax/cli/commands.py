import math
from pathlib import Path

import click
from flask import current_app

from mlrelax import approx, fracsolve, mlfun, spectra
from mlrelax.cli import bp
from mlrelax.cli.options import (
    FLOAT_LIST,
    CommandError,
    dispatch_settings,
    grid_options,
    out_option,
    reports_errors,
    resolve_grid,
    resolve_tolerance,
    tolerance_options,
    workers,
)
from mlrelax.cli.output import emit_csv, format_value
from mlrelax.core import make_grid
from mlrelax.errors import DomainError
from mlrelax.models import APPROXIMANTS, SCHEMES, Alpha, GridSpec

EVALUATORS = {
    'series': mlfun.eval_series,
    'spectral': mlfun.eval_spectral,
}

SPECTRUM_ALPHAS = (0.25, 0.5, 0.75, 0.9)
RELAXATION_ALPHAS = (0.25, 0.5, 0.75, 0.9, 1.0)
APPROXIMATION_ALPHAS = (0.25, 0.5, 0.75, 0.9, 0.99)
# figure id -> (alpha, family)
APPROXIMATION_FIGURES = {
    3 + i: (a, 'stretched_power') for i, a in enumerate(APPROXIMATION_ALPHAS)
} | {
    8 + i: (a, 'pade') for i, a in enumerate(APPROXIMATION_ALPHAS)
}
FAMILY_HEADERS = {
    'stretched_power': ['t', 'e', 'e0', 'einf', 'relerr_e0', 'relerr_einf'],
    'pade': ['t', 'e', 'f', 'g', 'relerr_f', 'relerr_g'],
}


@bp.cli.command('eval')
@click.option('--alpha', type=float, required=True, help='Order 0 < alpha <= 1.')
@click.option('--t', 't', type=float, required=True, help='Time t >= 0.')
@click.option('--method', type=click.Choice(['auto', 'series', 'asymptotic', 'spectral']),
              default='auto', show_default=True)
@tolerance_options
@reports_errors
def eval_command(alpha, t, method, tol, tol_abs):
    """Evaluate e_alpha(t) = E_alpha(-t**alpha); prints value,err_est,method."""
    tolerance = resolve_tolerance(tol, tol_abs)
    if method == 'auto':
        result = mlfun.eval_auto(alpha, t, tolerance, **dispatch_settings())
    elif method == 'asymptotic':
        result = mlfun.eval_asymptotic(alpha, t, tolerance)
    else:
        result = EVALUATORS[method](alpha, t, tolerance)
    if not result.converged:
        current_app.logger.warning('Result misses the requested tolerance (err_est %.3e)', result.err_est)
    click.echo(','.join([format_value(result.value), format_value(result.err_est), result.method]))


@bp.cli.command('spectrum')
@click.option('--alpha', type=float, required=True, help='Order 0 < alpha < 1.')
@click.option('--domain', type=click.Choice(['freq', 'time']), default='freq', show_default=True,
              help='Frequency spectrum K(r) or relaxation-time spectrum H(tau).')
@grid_options(0.01, 2.0, 200, log=False)
@out_option
@reports_errors
def spectrum_command(alpha, domain, grid_lo, grid_hi, grid_n, grid_log, out):
    """Tabulate the spectral density as abscissa,density."""
    grid = resolve_grid(grid_lo, grid_hi, grid_n, grid_log)
    points = spectra.spectrum_points(alpha, grid, domain)
    emit_csv(['abscissa', 'density'], [(p.abscissa, p.density) for p in points], out)


def _figure_path(outdir, which):
    return Path(outdir) / f'fig{which:02d}.csv'


@bp.cli.command('figures')
@click.option('--which', type=click.IntRange(1, 12), multiple=True,
              help='Figure id 1..12; repeat for several (default: all).')
@click.option('--out', 'outdir', type=click.Path(file_okay=False), default='figures', show_default=True,
              help='Directory receiving one CSV file per figure.')
@click.option('--grid-n', type=int, default=1001, show_default=True,
              help='Points on the 1e-5..1e5 grid of the approximation figures.')
@tolerance_options
@reports_errors
def figures_command(which, outdir, grid_n, tol, tol_abs):
    """Write the datasets behind the spectrum, relaxation and approximation plots."""
    tolerance = resolve_tolerance(tol, tol_abs)
    dispatch = dispatch_settings()
    for fig in sorted(set(which)) or range(1, 13):
        path = _figure_path(outdir, fig)
        if fig == 1:
            grid = GridSpec(0.01, 2.0, 200, 'linear')
            rows = [(a, p.abscissa, p.density) for a in SPECTRUM_ALPHAS
                    for p in spectra.spectrum_points(a, grid, 'freq')]
            emit_csv(['alpha', 'r', 'K'], rows, path)
        elif fig == 2:
            ts = _grid_points(GridSpec(0.0, 15.0, 151, 'linear'))
            rows = []
            for a in RELAXATION_ALPHAS:
                results = mlfun.eval_grid(a, ts, tolerance, workers(), **dispatch)
                rows.extend((a, t, r.value) for t, r in zip(ts, results))
            emit_csv(['alpha', 't', 'e'], rows, path)
        else:
            a, family = APPROXIMATION_FIGURES[fig]
            rows = approx.fig_rows(a, GridSpec.figure_range(grid_n), family, tolerance, workers(), **dispatch)
            emit_csv(FAMILY_HEADERS[family], rows, path)
        click.echo(str(path))


def _grid_points(grid):
    return [float(t) for t in make_grid(grid)]


@bp.cli.command('bounds-scan')
@click.option('--alpha', type=FLOAT_LIST, default=','.join(map(str, APPROXIMATION_ALPHAS)),
              show_default=True, help='Comma separated orders, each 0 < alpha < 1.')
@grid_options(1e-5, 1e5, 1001)
@click.option('--tol', type=float, default=None, help='Target relative accuracy of e_alpha.')
@click.option('--tol-abs', type=float, default=1e-12, show_default=True,
              help='Violation slack added to the evaluator error estimate.')
@out_option
@reports_errors
def bounds_scan_command(alpha, grid_lo, grid_hi, grid_n, grid_log, tol, tol_abs, out):
    """Check g <= e <= f on a grid; exits 1 if any point violates it or cannot be checked."""
    grid = resolve_grid(grid_lo, grid_hi, grid_n, grid_log)
    if grid.lo <= 0.0:
        raise CommandError('bounds-scan needs t > 0 on the whole grid (at t=0 g = e = f = 1 trivially)')
    tolerance = resolve_tolerance(tol, tol_abs)
    rows = []
    failed = False
    for a in alpha:
        report = approx.bounds_scan(a, grid, tolerance, workers(), **dispatch_settings())
        if report.ok:
            verdict = 'ok'
        else:
            verdict = 'VIOLATED' if report.violations else 'UNCHECKED'
        click.echo(f'alpha={format_value(a)}: {verdict} lower={report.violations_lower} '
                   f'upper={report.violations_upper} worst_gap={format_value(report.worst_signed_gap)} '
                   f'skipped={len(report.skipped)}', err=True)
        failed = failed or not report.ok
        rows.append((a, len(report.points), report.violations_lower, report.violations_upper,
                     report.worst_signed_gap, len(report.skipped)))
    emit_csv(['alpha', 'points', 'violations_lower', 'violations_upper', 'worst_signed_gap', 'skipped'],
             rows, out)
    if failed:
        click.get_current_context().exit(1)


@bp.cli.command('solve')
@click.option('--alpha', type=float, required=True, help='Order 0 < alpha <= 1.')
@click.option('--h', 'h', type=float, default=1e-2, show_default=True, help='Step size.')
@click.option('--horizon', type=float, default=5.0, show_default=True, help='Final time.')
@click.option('--scheme', type=click.Choice(SCHEMES), default='caputo_gl', show_default=True)
@click.option('--richardson', is_flag=True, help='Also run h/2 and h/4 and print observed orders.')
@tolerance_options
@out_option
@reports_errors
def solve_command(alpha, h, horizon, scheme, richardson, tol, tol_abs, out):
    """March the fractional relaxation equation; CSV t,u_numeric,u_analytic,abs_err at the compared nodes."""
    tolerance = resolve_tolerance(tol, tol_abs)
    dispatch = dispatch_settings()
    run = fracsolve.solve_relaxation(alpha, h, horizon, scheme, tolerance, **dispatch)
    rows = [(float(run.times[i]), float(run.values[i]), float(ref), abs(float(run.values[i]) - float(ref)))
            for i, ref in zip(run.reference_index, run.reference)]
    emit_csv(['t', 'u_numeric', 'u_analytic', 'abs_err'], rows, out)
    click.echo(f'scheme={scheme} h={format_value(h)} max_abs_err={format_value(run.max_abs_err)} '
               f'(t >= {format_value(run.error_from)}) max_abs_err_all={format_value(run.max_abs_err_all)}',
               err=True)
    if richardson:
        study = fracsolve.convergence_study(alpha, [h, h / 2.0, h / 4.0], horizon, scheme, tolerance, **dispatch)
        for step, err, order in study:
            shown = 'nan' if math.isnan(order) else format_value(order, 4)
            click.echo(f'h={format_value(step)} max_abs_err={format_value(err)} order={shown}', err=True)


@bp.cli.command('validity')
@click.option('--alpha', type=float, required=True, help='Order 0 < alpha < 1.')
@click.option('--approximant', type=click.Choice(APPROXIMANTS), multiple=True,
              help='Approximant to scan; repeat for several (default: all).')
@click.option('--threshold', type=float, default=0.01, show_default=True, help='Relative error threshold.')
@grid_options(1e-5, 1e5, 201)
@tolerance_options
@out_option
@reports_errors
def validity_command(alpha, approximant, threshold, grid_lo, grid_hi, grid_n, grid_log, tol, tol_abs, out):
    """Intervals where each approximant stays within the threshold: approximant,t_lo,t_hi."""
    grid = resolve_grid(grid_lo, grid_hi, grid_n, grid_log)
    tolerance = resolve_tolerance(tol, tol_abs)
    names = approximant or APPROXIMANTS
    if Alpha.coerce(alpha).is_exponential:
        raise DomainError('validity ranges need 0 < alpha < 1')
    rows = []
    for name in names:
        ranges = approx.validity_ranges(alpha, name, grid, threshold, tolerance, workers(), **dispatch_settings())
        rows.extend((name, lo, hi) for lo, hi in ranges.intervals)
    emit_csv(['approximant', 't_lo', 't_hi'], rows, out)


@bp.cli.command('laplace')
@click.option('--alpha', type=FLOAT_LIST, default='0.25,0.5,0.75,0.9', show_default=True,
              help='Comma separated orders.')
@click.option('--s', 's_values', type=FLOAT_LIST, default='0.1,1,10', show_default=True,
              help='Comma separated real Laplace variables s > 0.')
@tolerance_options
@out_option
@reports_errors
def laplace_command(alpha, s_values, tol, tol_abs, out):
    """Numerical Laplace transform against s**(alpha-1)/(s**alpha+1): alpha,s,lhs,rhs,rel_gap."""
    tolerance = resolve_tolerance(tol, tol_abs)
    rows = []
    for a in alpha:
        for s in s_values:
            lhs, rhs = mlfun.laplace_check(a, s, tolerance, **dispatch_settings())
            rows.append((a, s, lhs, rhs, abs(lhs - rhs) / rhs))
    emit_csv(['alpha', 's', 'lhs', 'rhs', 'rel_gap'], rows, out)


@bp.cli.command('crossings')
@click.option('--alpha', type=float, required=True, help='Order 0 < alpha < 1.')
@grid_options(1e-5, 1e5, 201)
@tolerance_options
@out_option
@reports_errors
def crossings_command(alpha, grid_lo, grid_hi, grid_n, grid_log, tol, tol_abs, out):
    """Times where the power law crosses e_alpha: alpha,t."""
    grid = resolve_grid(grid_lo, grid_hi, grid_n, grid_log)
    tolerance = resolve_tolerance(tol, tol_abs)
    points = approx.crossing_points(alpha, grid, tolerance, **dispatch_settings())
    emit_csv(['alpha', 't'], [(alpha, t) for t in points], out)
