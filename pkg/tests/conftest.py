import numpy as np
import pytest

from mycogate import ConductiveGrid, FhnParams, FhnState


@pytest.fixture
def full_grid_5x5():
    return ConductiveGrid.from_mask(np.ones((5, 5), dtype=bool))


@pytest.fixture
def single_node_grid():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    return ConductiveGrid.from_mask(mask)


@pytest.fixture
def cable_grid():
    return ConductiveGrid.from_mask(np.ones((1, 500), dtype=bool))


def random_grid(rng, h, w, density=0.5):
    return ConductiveGrid.from_mask(rng.random((h, w)) < density)


def random_state(rng, grid, scale=1.0):
    u = np.where(grid.mask, rng.random(grid.mask.shape) * scale, 0.0)
    v = np.where(grid.mask, rng.random(grid.mask.shape) * scale * 0.2, 0.0)
    return FhnState(u=u, v=v, t=0)
