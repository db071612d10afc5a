import numpy as np
import pytest

from zeitlab.estimates import random_function
from zeitlab.jacobi import JacobiState
from zeitlab.sphere import BandlimitedFunction


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pair(rng):
    return random_function(3, rng), random_function(3, rng)


@pytest.fixture
def zonal():
    return BandlimitedFunction.from_modes({(2, 0): 1.0})


@pytest.fixture
def xi0(rng):
    return JacobiState(random_function(3, rng), random_function(3, rng))
