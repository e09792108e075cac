import os

import numpy as np
import pytest

from algo_code.context import load_toy_fixture
from algo_code.datatypes import Params
from algo_code.scoring import ScoreTable
from algo_code.synthetic import make_synthetic_context

FIXTURE_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures", "toy.yaml")

# Location ids of the worked example, in the fixture's candidate order
TOY = {label: index for index, label in enumerate(["p8", "p7", "p6", "p3", "p1", "p5", "p2", "p9", "p4", "p10"])}

GRID = (0.1, 0.3, 0.5, 0.7, 0.9)


def toy_ids(*labels) -> tuple:
    return tuple(sorted(TOY[label] for label in labels))


@pytest.fixture(scope="session")
def fixture_path() -> str:
    return FIXTURE_PATH


@pytest.fixture(scope="session")
def toy_ctx():
    return load_toy_fixture(FIXTURE_PATH)


@pytest.fixture
def toy_table(toy_ctx):
    return ScoreTable(toy_ctx, 0.5)


@pytest.fixture
def toy_params():
    return Params.create(2, 0.5, 0.5)


def random_instance(seed: int, n_min: int = 6, n_max: int = 15, k_min: int = 2, k_max: int = 4):
    """
    One random oracle instance: a synthetic context with its score table and query parameters drawn from the parameter grid.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    k = int(rng.integers(k_min, min(k_max, n) + 1))
    alpha = float(rng.choice(GRID))
    omega = float(rng.choice(GRID))

    ctx = make_synthetic_context(n, seed=seed)
    return ScoreTable(ctx, alpha), Params.create(k, alpha, omega, metric="planar")


@pytest.fixture
def instance_factory():
    return random_instance
