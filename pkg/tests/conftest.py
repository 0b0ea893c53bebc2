import numpy as np
import pytest

from fisherlab import analytic as an
from fisherlab.grid import make_grid, normalize, sample


def hermite_wave(k, delta, grid, t=0.0):
    st = an.AnalyticState(k, delta, t)
    return normalize(sample(lambda x: an.psi_k(st, x), grid))


@pytest.fixture
def wide_grid():
    return make_grid(-20.0, 20.0, 4096)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
