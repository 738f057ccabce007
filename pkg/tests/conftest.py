import numpy as np
import pytest

from sklab import disorder, gaussian


@pytest.fixture(scope="session")
def rule64():
    return gaussian.gauss_hermite_rule(64)


@pytest.fixture(scope="session")
def gaussian_spec():
    return disorder.make_gaussian()


@pytest.fixture(scope="session")
def uniform_spec():
    return disorder.make_uniform()


@pytest.fixture(scope="session")
def rademacher_spec():
    return disorder.make_rademacher()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
