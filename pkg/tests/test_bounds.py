import itertools
import math

import numpy as np
import pytest

from algo_code.approx import d_lower_bound, prune_or_terminate
from algo_code.datatypes import Params
from algo_code.exact import d_hat_cap_lower_bound, post_feasible_threshold, prune_post_feasible, prune_pre_feasible
from algo_code.exact_plus import advanced_termination, max_completion_score, potential_locations, relevance_lower_bound
from algo_code.scoring import ScoreTable
from algo_code.synthetic import make_synthetic_context
from conftest import GRID, TOY, toy_ids

SLACK = 1e-12


def sample_states(count: int, seed: int, min_partial: int = 1, max_partial: int = 5, n_min: int = 8, n_max: int = 13):
    """
    Random (table, params, S_I, min_divs, S_R) states over fresh synthetic contexts. S_R is the rest of the candidates in relevance order.
    """
    rng = np.random.default_rng(seed)
    states_per_context = 50

    produced = 0
    context_seed = seed * 1000
    while produced < count:
        context_seed += 1
        n = int(rng.integers(n_min, n_max + 1))
        ctx = make_synthetic_context(n, seed=context_seed)
        table = ScoreTable(ctx, float(rng.choice(GRID)))

        for _ in range(min(states_per_context, count - produced)):
            size = int(rng.integers(min_partial, min(max_partial, n - 2) + 1))
            k = int(rng.integers(size + 1, min(size + 3, n) + 1))
            params = Params.create(k, table.alpha, float(rng.choice(GRID)), metric="planar")

            picks = rng.permutation(n)[:size]
            partial = tuple(ctx.candidates[index] for index in picks)
            remaining = tuple(location for location in table.relevance_order if location not in partial)
            min_divs = table.set_score(partial, params.omega).per_member_min_div

            produced += 1
            yield table, params, partial, min_divs, remaining, rng


def diversity(table: ScoreTable, members: tuple) -> float:
    return table.set_score(members, 0.5).diversity_sum


def best_completion(table: ScoreTable, partial: tuple, pool: tuple, size: int, omega: float) -> float:
    return max(table.set_score(partial + extra, omega).total for extra in itertools.combinations(pool, size))


def test_diversity_bounds_on_sampled_states():
    checked, violations = 0, []

    for table, params, partial, min_divs, remaining, rng in sample_states(10_000, seed=1):
        set_diversity = diversity(table, partial)
        d_values = {location: table.div_to_set(location, partial) for location in remaining}
        extension = remaining[int(rng.integers(len(remaining)))]
        d_hat, d_hat_cap, _ = table.updated_set_diversity(partial, min_divs, extension)

        # Gain decomposition, every set size
        gain = table.set_score(partial + (extension,), params.omega).total - table.set_score(partial, params.omega).total
        decomposed = params.omega * table.relevance[extension] + (1 - params.omega) * (d_hat + d_hat_cap - set_diversity)
        if abs(gain - decomposed) > SLACK:
            violations.append(("gain identity", partial, extension))

        # Updated diversity of S_I bounds the old members' part of any superset
        size = int(rng.integers(1, min(3, len(remaining)) + 1))
        extra = tuple(remaining[index] for index in rng.permutation(len(remaining))[:size])
        anchor = extra[int(rng.integers(len(extra)))]
        _, anchor_cap, _ = table.updated_set_diversity(partial, min_divs, anchor)
        if diversity(table, partial + extra) > anchor_cap + math.fsum(d_values[location] for location in extra) + SLACK:
            violations.append(("superset diversity cap", partial, extra))

        if len(partial) >= 2:
            if d_hat_cap > set_diversity + SLACK:
                violations.append(("updated diversity cap", partial, extension))
            if diversity(table, partial + (extension,)) > set_diversity + max(d_values.values()) + SLACK:
                violations.append(("single extension cap", partial, extension))

            top = math.fsum(sorted(d_values.values(), reverse=True)[:len(extra)])
            if diversity(table, partial + extra) > set_diversity + top + SLACK:
                violations.append(("top-d extension cap", partial, extra))

        checked += 1

    assert checked >= 10_000
    assert violations == []


def test_pre_feasible_pruning_never_drops_a_positive_gain():
    for table, params, partial, min_divs, remaining, _ in sample_states(2_000, seed=2, min_partial=2):
        kept, pruned = prune_pre_feasible(table, partial, min_divs, remaining, params)
        assert set(kept) | set(pruned) == set(remaining)

        before = table.set_score(partial, params.omega).total
        for location in pruned:
            assert table.set_score(partial + (location,), params.omega).total - before <= SLACK


def test_pre_feasible_bound_is_negative_for_singletons(toy_table):
    for location in toy_table.ctx.candidates:
        remaining = tuple(other for other in toy_table.relevance_order if other != location)
        for omega in GRID:
            params = Params.create(2, 0.5, omega)
            assert d_hat_cap_lower_bound(toy_table, (location,), (0.0,), remaining, params) < 0.0
            assert prune_pre_feasible(toy_table, (location,), (0.0,), remaining, params) == (remaining, ())


def test_pre_feasible_bound_vanishes_as_omega_grows(toy_table):
    partial = toy_ids("p8", "p7")
    min_divs = toy_table.set_score(partial, 0.5).per_member_min_div
    remaining = tuple(location for location in toy_table.relevance_order if location not in partial)

    bounds = [d_hat_cap_lower_bound(toy_table, partial, min_divs, remaining, Params.create(3, 0.5, omega)) for omega in (0.5, 0.9, 0.999)]
    assert bounds[0] > bounds[1] > bounds[2]
    assert bounds[2] < -100


def test_post_feasible_pruning_is_sound():
    for table, params, partial, min_divs, remaining, rng in sample_states(600, seed=3, max_partial=3, n_max=11):
        need = params.k - len(partial)
        # Incumbent from a random feasible set, nudged so some states prune
        members = tuple(table.ctx.candidates[index] for index in rng.permutation(table.ctx.size)[:params.k])
        best_score = table.set_score(members, params.omega).total * float(rng.uniform(1.0, 1.3))

        kept, pruned = prune_post_feasible(table, partial, min_divs, remaining, best_score, params)
        assert set(kept) | set(pruned) == set(remaining)

        for location in pruned:
            pool = tuple(other for other in remaining if other != location)
            assert best_completion(table, partial + (location,), pool, need - 1, params.omega) < best_score


def test_toy_post_feasible_thresholds(toy_table):
    params = Params.create(2, 0.5, 0.5)
    best_p8_p5 = toy_table.set_score(toy_ids("p8", "p5"), 0.5).total
    best_p7_p5 = toy_table.set_score(toy_ids("p7", "p5"), 0.5).total

    p7_rest = tuple(location for location in toy_table.relevance_order if location not in toy_ids("p8", "p7"))
    threshold = post_feasible_threshold(toy_table, (TOY["p7"],), p7_rest, best_p8_p5, params)
    assert threshold == pytest.approx(0.339, abs=2.5e-3)
    assert threshold == pytest.approx(0.339064, abs=1e-6)
    kept, pruned = prune_post_feasible(toy_table, (TOY["p7"],), (0.0,), p7_rest, best_p8_p5, params)
    assert pruned == ()

    p6_rest = tuple(location for location in toy_table.relevance_order if location not in toy_ids("p8", "p7", "p6"))
    threshold = post_feasible_threshold(toy_table, (TOY["p6"],), p6_rest, best_p7_p5, params)
    assert threshold == pytest.approx(0.908, abs=2.5e-3)
    assert threshold == pytest.approx(0.908067, abs=1e-6)
    kept, pruned = prune_post_feasible(toy_table, (TOY["p6"],), (0.0,), p6_rest, best_p7_p5, params)
    assert kept == ()


def test_toy_relevance_lower_bound(toy_table):
    params = Params.create(2, 0.5, 0.5)
    remaining = tuple(location for location in toy_table.relevance_order if location != TOY["p8"])

    r_lower = relevance_lower_bound(toy_table, (TOY["p8"],), (0.0,), TOY["p7"], remaining, params)
    assert r_lower == pytest.approx(0.405, abs=2.5e-3)
    assert r_lower == pytest.approx(0.405048, abs=1e-6)

    potential = potential_locations(toy_table, remaining, r_lower)
    assert set(remaining) - set(potential) == set(toy_ids("p4", "p10"))
    assert potential[0] == TOY["p7"]


def test_relevance_lower_bound_of_the_most_diverse_reference(toy_table):
    params = Params.create(3, 0.5, 0.5)
    partial = (TOY["p8"],)
    remaining = tuple(location for location in toy_table.relevance_order if location != TOY["p8"])
    l_ref = max(remaining, key=lambda location: toy_table.pair_diversity(location, TOY["p8"]))

    assert relevance_lower_bound(toy_table, partial, (0.0,), l_ref, remaining, params) == toy_table.relevance[l_ref]


def test_potential_locations_keep_everything_under_a_low_bound(toy_table):
    remaining = toy_table.relevance_order[1:]
    assert potential_locations(toy_table, remaining, -1.0) == remaining


def test_potential_locations_guard_the_reference(toy_table):
    remaining = toy_table.relevance_order[1:]
    with pytest.raises(AssertionError):
        potential_locations(toy_table, remaining, 2.0)


def _greedy_argmax_is_potential(table, params, partial, min_divs, remaining, strict):
    r_lower = relevance_lower_bound(table, partial, min_divs, remaining[0], remaining, params, strict)
    potential = set(potential_locations(table, remaining, r_lower))

    scores = {location: table.extend(partial, min_divs, location, params.omega).total for location in remaining}
    top = max(scores.values())
    return all(location in potential for location, score in scores.items() if score == top)


def test_relevance_bound_keeps_the_greedy_choice():
    for table, params, partial, min_divs, remaining, _ in sample_states(3_000, seed=4, min_partial=2):
        assert _greedy_argmax_is_potential(table, params, partial, min_divs, remaining, strict=False)


def test_strict_singleton_bound_keeps_the_greedy_choice():
    for table, params, partial, min_divs, remaining, _ in sample_states(3_000, seed=5, max_partial=1):
        assert _greedy_argmax_is_potential(table, params, partial, min_divs, remaining, strict=True)


def test_strict_singleton_bound_is_not_looser(toy_table):
    params = Params.create(2, 0.5, 0.5)
    remaining = tuple(location for location in toy_table.relevance_order if location != TOY["p8"])

    default_bound = relevance_lower_bound(toy_table, (TOY["p8"],), (0.0,), TOY["p7"], remaining, params)
    strict = relevance_lower_bound(toy_table, (TOY["p8"],), (0.0,), TOY["p7"], remaining, params, strict_singleton_bound=True)
    assert strict <= default_bound


def test_advanced_termination_is_confirmed_by_completion():
    fired = 0
    for table, params, partial, min_divs, remaining, rng in sample_states(1_500, seed=6, max_partial=3, n_max=11):
        need = params.k - len(partial)
        best_score = max_completion_score(table, partial, min_divs, remaining, params) * float(rng.uniform(0.8, 1.1))

        if advanced_termination(table, partial, min_divs, remaining, best_score, params):
            fired += 1
            assert best_completion(table, partial, remaining, need, params.omega) < best_score

    assert fired > 0


def test_advanced_termination_needs_an_incumbent(toy_table):
    params = Params.create(2, 0.5, 0.5)
    remaining = toy_table.relevance_order[1:]

    assert not advanced_termination(toy_table, toy_table.relevance_order[:1], (0.0,), remaining, 0.0, params)


def test_advanced_termination_with_worthless_remainder():
    from algo_code.context import QueryContext
    from algo_code.datatypes import DistanceMetric

    # Locations 2 and 3 sit on top of location 0, nobody visited them and the lone friend is far away
    distances = np.array([[0.0, 5.0, 0.0, 0.0], [5.0, 0.0, 5.0, 5.0], [0.0, 5.0, 0.0, 0.0], [0.0, 5.0, 0.0, 0.0]])
    ctx = QueryContext("u", [0, 1, 2, 3], {0: "0", 1: "1", 2: "2", 3: "3"}, ["a"], {"a": [1]}, DistanceMetric.INJECTED_MATRIX,
                       injected_distances=distances)
    table = ScoreTable(ctx, 0.0)
    params = Params.create(3, 0.0, 0.5)

    partial = (0, 1)
    min_divs = table.set_score(partial, 0.5).per_member_min_div
    score = table.set_score(partial, 0.5).total

    assert table.relevance[2] == 0.0 and table.relevance[3] == 0.0
    assert table.div_to_set(2, partial) == 0.0
    assert advanced_termination(table, partial, min_divs, (2, 3), score + 1e-6, params)


def test_approx_threshold_partitions_the_remainder():
    for table, params, partial, min_divs, remaining, rng in sample_states(2_000, seed=7, min_partial=2):
        score = table.set_score(partial, params.omega).total
        best_score = score + float(rng.uniform(0.0, 1.0))

        threshold = d_lower_bound(table, partial, score, remaining, best_score, params)
        kept, pruned, terminated = prune_or_terminate(table, partial, score, remaining, best_score, params)

        assert all(table.div_to_set(location, partial) > threshold for location in kept)
        assert all(table.div_to_set(location, partial) <= threshold for location in pruned)
        assert terminated == (not kept)


def test_approx_threshold_is_non_positive_when_relevance_covers_the_gap(toy_table):
    params = Params.create(3, 0.5, 0.5)
    partial = toy_ids("p8", "p7")
    score = toy_table.set_score(partial, 0.5).total
    remaining = tuple(location for location in toy_table.relevance_order if location not in partial)

    assert d_lower_bound(toy_table, partial, score, remaining, score, params) <= 0.0
    kept, pruned, terminated = prune_or_terminate(toy_table, partial, score, remaining, score, params)
    assert kept == remaining and pruned == () and not terminated
