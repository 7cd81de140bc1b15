import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pconvex.measure import MeasureSpace

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def two_atoms():
    return MeasureSpace(atoms=(("a", 1.0), ("b", 1.0)))


@pytest.fixture
def mixed():
    return MeasureSpace(atoms=(("a", 0.5), ("b", 1.5)), cell_count=3, cell_weight=0.4)


@pytest.fixture
def cells3():
    return MeasureSpace(cell_count=3, cell_weight=1 / 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
