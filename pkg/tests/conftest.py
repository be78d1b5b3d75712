import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_series(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)
