import numpy as np
import pytest

from bolab.grid import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid_small():
    return Grid(256, 16 * np.pi)


@pytest.fixture
def grid_medium():
    return Grid(512, 16 * np.pi)
