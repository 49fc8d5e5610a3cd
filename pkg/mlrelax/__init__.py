import os

from dotenv import load_dotenv
from flask import Flask

from mlrelax.config import config, load_environment
from mlrelax.errors import InvalidParameterError
from mlrelax.models import Tolerance


def create_app(config_name=None):
    """Application factory pattern."""

    # Load environment variables
    load_dotenv()

    app = Flask('mlrelax')

    # Load configuration: class defaults, then MLRELAX_* from the environment
    config_name = config_name or os.environ.get('MLRELAX_ENV', 'development')
    if config_name not in config:
        raise InvalidParameterError(f'unknown configuration {config_name!r}, expected one of {sorted(config)}')
    app.config.from_object(config[config_name])
    load_environment(app.config)

    # Fail early on an unusable tolerance
    Tolerance(app.config['TOL_REL'], app.config['TOL_ABS'])

    app.logger.setLevel(app.config['LOG_LEVEL'])
    app.logger.debug('Loaded %s configuration', config_name)

    # Register CLI commands
    from mlrelax.cli import bp as cli_bp
    app.register_blueprint(cli_bp)

    return app
