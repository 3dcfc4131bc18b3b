import numpy as np
import pytest

from gmeasure.prob_core import Dist, Grid, SemanticChannel, TruthFn
from gmeasure.purposive import ControlProblem


@pytest.fixture(scope="session")
def example3():
    return ControlProblem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_dist(rng, grid, zeros=False):
    w = rng.dirichlet(np.full(grid.size, 0.7))
    if zeros and grid.size > 2:
        w[rng.integers(grid.size)] = 0.0
        w /= w.sum()
    return Dist(grid, w)


def random_truth(rng, grid):
    v = rng.uniform(0.01, 1.0, grid.size)
    v /= v.max()
    return TruthFn(grid, v)


def random_sem(rng, grid, n_labels):
    return SemanticChannel(tuple(random_truth(rng, grid) for _ in range(n_labels)))


def random_channel_matrix(rng, n_x, n_y):
    return rng.dirichlet(np.full(n_y, 0.8), size=n_x)


def small_grid(n):
    return Grid(np.arange(float(n)))
