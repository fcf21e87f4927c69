import numpy as np
import pytest

from ternary_stab import make_params


@pytest.fixture(scope="session")
def params32():
    return make_params(3, 2)


@pytest.fixture(scope="session")
def params42():
    return make_params(4, 2)


@pytest.fixture(scope="session")
def params43():
    return make_params(4, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
