import numpy as np
import pytest

from platelim import EnergyDensity


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["logdet", "invdet"])
def blowup_density(request):
    return EnergyDensity(request.param, p=2.0)


@pytest.fixture
def logdet2():
    return EnergyDensity("logdet", p=2.0)
