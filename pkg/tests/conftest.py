import itertools
import os

import numpy as np
import pytest

from acteval.datagen import EvaluationWorld, GeneratorConfig, ScoreDistribution, TaskModel, build_world
from acteval.rankings import Ranking


def pytest_collection_modifyitems(config, items):
    if os.getenv("ACTEVAL_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set ACTEVAL_SLOW=1 to run desk-scale reproductions")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_kendall_tau(r1: Ranking, r2: Ranking) -> int:
    """O(p^2) pair enumeration."""
    return sum(
        1
        for a, b in itertools.combinations(r1.order, 2)
        if r1.prefers(a, b) != r2.prefers(a, b)
    )


def noiseless_world(m: int, n: int, seed: int = 0) -> EvaluationWorld:
    """Zero dispersion, zero noise: every task ranking is the ground truth."""
    config = GeneratorConfig(m=m, n=n, phi=0.0, sigma=0.0, seed=seed)
    return build_world(config, np.random.default_rng(seed))


def fixed_world(means: list[list[float]], sigma: float = 0.0) -> EvaluationWorld:
    """A world from an n x m table of means; ground truth orders the column means."""
    tasks = tuple(
        TaskModel(Ranking.from_scores(row), tuple(ScoreDistribution(float(mu), sigma) for mu in row))
        for row in means
    )
    return EvaluationWorld(Ranking.from_scores(np.mean(means, axis=0)), tasks)
