import numpy as np
import pytest

import scalarflow  # noqa: F401  (pins BLAS threads before numpy spins up pools)
from scalarflow.scenarios import desk_scale, example1, example2


@pytest.fixture(scope="session")
def ex1_small():
    return desk_scale(example1(), "small")


@pytest.fixture(scope="session")
def ex2_small():
    return desk_scale(example2(), "small")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
