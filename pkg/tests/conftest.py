import numpy as np
import pytest

from core.pqc import EXECUTIONS


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def executions():
    EXECUTIONS.reset()
    yield EXECUTIONS
