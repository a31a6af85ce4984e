import numpy as np
import pytest

from relwave import Grid, MetricField


@pytest.fixture
def flat_1p1():
    grid = Grid.spacetime_1p1(32, 0.05, 64, 0.1, -3.2)
    return grid, MetricField.flat(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
