import numpy as np
import pytest

from rksampling.domain import Domain
from rksampling.space import Generator, Grid, Lattice, Space


@pytest.fixture
def hat():
    return Generator.bspline(2)


@pytest.fixture
def hat_space(hat):
    return Space(hat, Lattice.integer(-8, 12), A=1.0, B=3.0, p=2.0)


@pytest.fixture
def omega4():
    return Domain("0 4")


@pytest.fixture
def hat_grid(hat_space, omega4):
    return hat_space.grid_for(hat_space.lattice.nodes, 1 / 64, omega4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
