import numpy as np
import pytest

from crdistill import named_ensemble
from crdistill.config import SolverConfig


@pytest.fixture(scope="session")
def fast_cfg():
    return SolverConfig(starts=8, max_iter=4000)


@pytest.fixture(scope="session")
def two_state():
    return named_ensemble("two_state")


@pytest.fixture(scope="session")
def three_state():
    return named_ensemble("three_state")


@pytest.fixture(scope="session")
def bb84():
    return named_ensemble("bb84", np.pi / 8)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
