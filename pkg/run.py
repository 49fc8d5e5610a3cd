"""Command line entry point: python run.py <command> [options]."""
from flask.cli import FlaskGroup

from mlrelax import create_app

cli = FlaskGroup(create_app=create_app, add_default_commands=False,
                 help='Numerics for the relaxation function e_alpha(t) = E_alpha(-t**alpha).')

if __name__ == '__main__':
    cli()
