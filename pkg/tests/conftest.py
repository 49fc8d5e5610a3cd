import sys
from pathlib import Path

import pytest

# Ensure the project root is on sys.path so pytest can import the `mlrelax` package
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from mlrelax import create_app
from mlrelax.config import ENVIRONMENT_KEYS


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep MLRELAX_* settings of the calling shell out of the tests."""
    for name in ENVIRONMENT_KEYS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.delenv('MLRELAX_ENV', raising=False)


@pytest.fixture
def app():
    """Create application for testing."""
    app = create_app('testing')
    with app.app_context():
        yield app


@pytest.fixture
def runner(app):
    """Create test CLI runner."""
    return app.test_cli_runner()


def read_csv(path):
    """Header and float rows of a CSV written by the CLI."""
    lines = Path(path).read_text(encoding='utf-8').splitlines()
    header = lines[0].split(',')
    rows = [[float(v) for v in line.split(',')] for line in lines[1:]]
    return header, rows
