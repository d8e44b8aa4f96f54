import pytest
from hypothesis import HealthCheck, settings

from dynloc import _backend

settings.register_profile(
    "dynloc", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dynloc")


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param
