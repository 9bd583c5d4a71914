"""
Shared fixtures for the test suite.
"""

import pytest
from hypothesis import HealthCheck, settings

from config import get_settings
from ncexpr import ExprStore, var_x, var_y
from repeq import EqConfig

settings.register_profile(
    "engine",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("engine")


@pytest.fixture(autouse=True)
def fresh_settings():
    """Re-read settings from the environment for every test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def store():
    """An empty expression store."""
    return ExprStore()


@pytest.fixture
def xy(store):
    """The generators x, y in the test store."""
    return var_x(store), var_y(store)


@pytest.fixture
def small_cfg():
    """A cheap equality protocol: one size, a few trials."""
    return EqConfig(sizes=(2,), order=3, trials=3, bound=3, seed=1)


@pytest.fixture
def acceptance_cfg():
    """The default protocol used by the acceptance batteries."""
    return EqConfig(sizes=(2, 3), order=4, trials=10, bound=3, seed=7)
