import numpy as np
import pytest

from orbiteig.geometry import BoundaryOrbit


@pytest.fixture
def unit_orbit():
    return BoundaryOrbit(2, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
