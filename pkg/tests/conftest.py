import numpy as np
import pytest

from capax.grid import Grid, Params


@pytest.fixture
def g64():
    return Grid(1, 1.0, 64)


@pytest.fixture
def g2d():
    return Grid(2, 1.0, 32)


@pytest.fixture
def params():
    return Params(1, 0.4, 2.0, q=1.5, p=2.0, r=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(987)
