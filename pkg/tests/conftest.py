import numpy as np
import pytest

from stochreg.grid import TimeGrid
from stochreg.spectral import make_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_grid():
    return TimeGrid(1.0, 200)


@pytest.fixture
def three_mode_model():
    return make_model([1.0, 2.0, 5.0], q=2.0)
