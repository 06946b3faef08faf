import numpy as np
import pytest

from gp_thermal.hermite import build_grid
from gp_thermal.measures import free_spec, sample_free_field


@pytest.fixture(scope="session")
def grid15():
    return build_grid(15)


@pytest.fixture
def random_field():
    def make(n_modes, seed=0, size=None):
        return sample_free_field(free_spec(n_modes), seed, size)
    return make


def zscore(mean, se, target):
    return abs(mean - target) / se
