import os
import numpy as np
import pytest
from icm.diffusion import default_schedule
from icm.matching import FeatureGrid

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')

def fixture_path(name):
    return os.path.join(FIXTURES, name)

def random_grid(rng, h, w, c):
    return FeatureGrid(rng.standard_normal((h, w, c)).astype(np.float32))

def one_hot_grid(h, w):
    """Every pixel gets its own unit channel, so descriptors are orthonormal."""
    return FeatureGrid(np.eye(h*w, dtype=np.float32).reshape(h, w, h*w))

@pytest.fixture
def rng():
    return np.random.default_rng(1234)

@pytest.fixture
def sched():
    return default_schedule()
