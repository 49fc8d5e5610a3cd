import os

# Environment variable -> (config key, parser)
ENVIRONMENT_KEYS = {
    'MLRELAX_TOL': ('TOL_REL', float),
    'MLRELAX_TOL_ABS': ('TOL_ABS', float),
    'MLRELAX_T_LO': ('SERIES_MAX_X', float),
    'MLRELAX_T_HI': ('ASYMPTOTIC_MIN_X', float),
    'MLRELAX_WORKERS': ('WORKERS', int),
    'MLRELAX_LOG_LEVEL': ('LOG_LEVEL', str.upper),
}


class Config:
    """Base configuration class."""
    # Evaluation accuracy
    TOL_REL = 1e-10
    TOL_ABS = 0.0

    # Dispatch thresholds in x = t**alpha
    SERIES_MAX_X = 1.0
    ASYMPTOTIC_MIN_X = 15.0

    # Grid evaluation threads
    WORKERS = 1

    LOG_LEVEL = 'INFO'

    CSV_SIGNIFICANT_DIGITS = 17


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    LOG_LEVEL = 'DEBUG'


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    LOG_LEVEL = 'WARNING'


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}


def load_environment(app_config, environ=None):
    """Overlay MLRELAX_* variables on the class defaults; bad values raise ValueError."""
    environ = os.environ if environ is None else environ
    for name, (key, parse) in ENVIRONMENT_KEYS.items():
        raw = environ.get(name)
        if raw in (None, ''):
            continue
        try:
            app_config[key] = parse(raw)
        except ValueError as exc:
            raise ValueError(f'{name}={raw!r} is not a valid {parse.__name__}') from exc
