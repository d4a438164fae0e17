import numpy as np
import pytest

from kkwaves.geometry import SpacetimeParams, horizon_structure


@pytest.fixture(scope="session")
def params():
    # well-separated horizons, small charge coupling
    return SpacetimeParams(M=1.0, Q=0.5, Lambda=0.05, q=0.05, m=1.0)


@pytest.fixture(scope="session")
def params_uncharged():
    return SpacetimeParams(M=1.0, Q=0.5, Lambda=0.05, q=0.0, m=1.0)


@pytest.fixture(scope="session")
def horizons(params):
    return horizon_structure(params)


@pytest.fixture(scope="session")
def horizons_uncharged(params_uncharged):
    return horizon_structure(params_uncharged)


@pytest.fixture()
def rng():
    return np.random.default_rng(20230817)
