import pytest

from spaghetti.ensemble import band, build_ensemble, default_grid
from spaghetti.fit import FitConfig
from spaghetti.harness import demo_series


@pytest.fixture(scope="session")
def demo():
    return demo_series()


@pytest.fixture(scope="session")
def demo_ensemble(demo):
    # one shared build; the leave-one-out searches dominate suite runtime
    return build_ensemble(demo, FitConfig())


@pytest.fixture(scope="session")
def demo_band(demo, demo_ensemble):
    return band(demo_ensemble, default_grid(demo))
