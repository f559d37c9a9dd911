import numpy as np
import pytest

from adadkrr.data import gen_synthetic
from adadkrr.kernels import KernelSpec
from adadkrr.select import lambda_grid, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def wendland():
    return KernelSpec.wendland()


@pytest.fixture
def small_data():
    """200 noisy g1 samples in [0, 1]^3."""
    train, _ = gen_synthetic("g1", 200, 3, 0.2, seed=7)
    return train


@pytest.fixture
def test_points():
    test, clean = gen_synthetic("g1", 50, 3, 0.0, seed=8)
    return test.inputs, clean


@pytest.fixture
def small_grid(wendland):
    return make_grid(lambda_grid(2)[:6], [wendland])


@pytest.fixture
def tiny_config():
    """A fast synthetic experiment, as a JSON-style mapping."""
    return {
        "name": "tiny",
        "dataset": {"kind": "synthetic", "target": "g1", "dim": 2, "train_size": 120, "test_size": 40},
        "grid": {"family": "wendland", "lambdas": [1.0, 0.1, 0.01, 0.001]},
        "methods": ["AdaDKRR-holdout", "DKRR"],
        "m": [1, 3],
        "trials": 2,
        "seed": 11,
        "threads": 1,
    }
