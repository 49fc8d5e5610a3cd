"""Shared click options and the settings they resolve against the app config."""
import functools

import click
from flask import current_app

from mlrelax.errors import InvalidParameterError, MLRelaxError
from mlrelax.models import GridSpec, Tolerance


class CommandError(click.ClickException):
    """Domain or usage failure reported to the shell with exit code 2."""
    exit_code = 2


def reports_errors(func):
    """Turn MLRelaxError raised inside a command into a CommandError."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except MLRelaxError as exc:
            current_app.logger.debug('Command failed', exc_info=exc)
            raise CommandError(f'{type(exc).__name__}: {exc}') from exc
    return wrapper


class FloatList(click.ParamType):
    """Comma separated floats, e.g. 0.25,0.5,0.75."""
    name = 'floats'

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        try:
            return [float(part) for part in str(value).split(',') if part.strip()]
        except ValueError:
            self.fail(f'{value!r} is not a comma separated list of numbers', param, ctx)


FLOAT_LIST = FloatList()


def tolerance_options(func):
    func = click.option('--tol-abs', type=float, default=None,
                        help='Absolute error floor (default: MLRELAX_TOL_ABS or 0).')(func)
    func = click.option('--tol', type=float, default=None,
                        help='Target relative accuracy (default: MLRELAX_TOL or 1e-10).')(func)
    return func


def grid_options(lo, hi, count, log=True):
    """Attach --grid-lo/--grid-hi/--grid-n/--grid-log with per-command defaults."""
    def decorator(func):
        func = click.option('--grid-log/--grid-linear', 'grid_log', default=log, show_default=True,
                            help='Logarithmic or linear spacing.')(func)
        func = click.option('--grid-n', type=int, default=count, show_default=True,
                            help='Number of grid points.')(func)
        func = click.option('--grid-hi', type=float, default=hi, show_default=True,
                            help='Largest abscissa.')(func)
        func = click.option('--grid-lo', type=float, default=lo, show_default=True,
                            help='Smallest abscissa.')(func)
        return func
    return decorator


def out_option(func):
    return click.option('--out', type=click.Path(dir_okay=False), default=None,
                        help='Write CSV to this file instead of stdout.')(func)


def resolve_tolerance(tol=None, tol_abs=None):
    """Command flag first, then the app config (which already folds in MLRELAX_TOL*)."""
    rel = tol if tol is not None else current_app.config['TOL_REL']
    absolute = tol_abs if tol_abs is not None else current_app.config['TOL_ABS']
    return Tolerance(rel, absolute)


def resolve_grid(grid_lo, grid_hi, grid_n, grid_log):
    return GridSpec(grid_lo, grid_hi, grid_n, 'log' if grid_log else 'linear')


def dispatch_settings():
    """Keyword arguments forwarded to the evaluator dispatch."""
    return {
        'series_max_x': current_app.config['SERIES_MAX_X'],
        'asymptotic_min_x': current_app.config['ASYMPTOTIC_MIN_X'],
    }


def workers():
    count = current_app.config['WORKERS']
    if count < 1:
        raise InvalidParameterError(f'MLRELAX_WORKERS must be >= 1, got {count}')
    return count
