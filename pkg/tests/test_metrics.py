import math

import numpy as np
import pytest

from algo_code.context import QueryContext
from algo_code.datatypes import DistanceMetric
from algo_code.metrics import MmdMode, entropy_is_degenerate, mmd, precision, social_coverage, social_entropy, socio_spatial_distance
from algo_code.scoring import ScoreTable
from algo_code.synthetic import make_synthetic_context
from conftest import TOY, toy_ids
from utils.errors import DomainError


def _equal_visitor_context(k: int) -> QueryContext:
    # Every location visited by exactly two friends of its own
    friends = [f"f{index}" for index in range(2 * k)]
    friend_locations = {friend: [index // 2] for index, friend in enumerate(friends)}
    distances = np.ones((k, k)) - np.eye(k)
    return QueryContext("u", list(range(k)), {index: str(index) for index in range(k)}, friends, friend_locations,
                        DistanceMetric.INJECTED_MATRIX, injected_distances=distances)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_entropy_of_an_even_distribution(k):
    ctx = _equal_visitor_context(k)
    assert social_entropy(ctx, range(k)) == math.log2(k)


def test_entropy_without_visitors_is_degenerate():
    ctx = make_synthetic_context(10, seed=0)
    unvisited = [location for location in ctx.candidates if not ctx.visitor_sets[location]]
    if not unvisited:
        pytest.skip("every candidate has a visitor in this context")

    assert social_entropy(ctx, unvisited[:1]) == 0.0
    assert entropy_is_degenerate(ctx, unvisited[:1])


def test_precision():
    assert precision((1, 2, 3), (3, 2, 1)) == 1.0
    assert precision((1, 2), (2, 3)) == 0.5
    with pytest.raises(DomainError):
        precision((1,), (1, 2))


@pytest.mark.parametrize("seed", range(100))
def test_social_coverage_grows_with_theta(seed):
    rng = np.random.default_rng(seed)
    ctx = make_synthetic_context(int(rng.integers(6, 20)), seed=seed)
    selected = tuple(ctx.candidates[index] for index in rng.permutation(ctx.size)[:3])

    thetas = np.sort(rng.uniform(0.0, 150.0, size=6))
    coverages = [social_coverage(ctx, selected, float(theta)) for theta in thetas]
    assert all(later >= earlier for earlier, later in zip(coverages, coverages[1:]))
    assert social_coverage(ctx, selected, 1e9) == 100.0


def test_social_coverage_rejects_negative_radius(toy_ctx):
    with pytest.raises(DomainError):
        social_coverage(toy_ctx, (0,), -1.0)


@pytest.mark.parametrize("seed", range(100))
def test_mmd_shrinks_on_supersets(seed):
    rng = np.random.default_rng(seed)
    ctx = make_synthetic_context(int(rng.integers(6, 20)), seed=seed)
    order = tuple(ctx.candidates[index] for index in rng.permutation(ctx.size))
    subset, superset = order[:2], order[:4]

    for mode in MmdMode:
        assert mmd(ctx, superset, mode, 0.5) <= mmd(ctx, subset, mode, 0.5)


def test_mmd_of_empty_set_is_rejected(toy_ctx):
    with pytest.raises(DomainError):
        mmd(toy_ctx, ())


def test_socio_spatial_distance_matches_pair_diversity(toy_ctx):
    table = ScoreTable(toy_ctx, 0.5)
    assert socio_spatial_distance(toy_ctx, TOY["p6"], TOY["p2"], 0.5) == pytest.approx(table.pair_diversity(TOY["p6"], TOY["p2"]))


def test_toy_metrics_are_finite(toy_ctx):
    selected = toy_ids("p7", "p5")

    assert mmd(toy_ctx, selected) >= 0.0
    assert 0.0 <= social_coverage(toy_ctx, selected, 3.5) <= 100.0
    # Visitor counts 3 and 3
    assert social_entropy(toy_ctx, selected) == 1.0
