import pytest
from hypothesis import HealthCheck, settings

from lorenz_spec.manifolds import build_holonomy_chart
from lorenz_spec.params import DEFAULT_PARAMS
from lorenz_spec.return_map import lowest_period_orbit

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def periodic(params):
    return lowest_period_orbit(params)


@pytest.fixture(scope="session")
def chart(params, periodic):
    return build_holonomy_chart(params, periodic, mu=0.1, L_const=1.0)
