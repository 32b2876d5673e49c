import math

import numpy as np
import pytest

from qaoa_rl.chain import make_disordered, make_uniform
from qaoa_rl.types import ChainSpec, Schedule


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def uniform8() -> ChainSpec:
    return make_uniform(8, 1.0)


@pytest.fixture
def disordered8() -> ChainSpec:
    return make_disordered(8, 0.0, 42)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_schedule(rng: np.random.Generator, p: int) -> Schedule:
    angles = rng.uniform(0.0, math.pi / 2, size=2 * p)
    return Schedule.from_vector(angles)
