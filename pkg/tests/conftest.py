import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wardsoliton import specfile

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SHIPPED = ["one_soliton", "two_pole_bt", "double_pole", "triple_pole", "two_double_poles", "uniton_c3"]


@pytest.fixture(scope="session")
def shipped_solutions():
    return {name: specfile.build(specfile.shipped(name)) for name in SHIPPED}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
