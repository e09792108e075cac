import math

import pytest

from algo_code.baselines import brute_force
from algo_code.datatypes import Params
from algo_code.exact import solve_exact
from algo_code.scoring import ScoreTable
from conftest import random_instance, toy_ids
from utils.errors import DomainError

ORACLE_INSTANCES = 500


def test_toy_top_two(toy_table, toy_params):
    result = solve_exact(toy_table, toy_params)

    assert result.members == toy_ids("p7", "p5")
    assert set(result.labels) == {"p7", "p5"}
    assert result.total == pytest.approx(1.451, abs=2.5e-3)
    assert result.telemetry["pruned_property2"] > 0
    assert result.telemetry["incumbent_updates"] >= 2
    assert not result.telemetry["exhausted"]


def test_toy_social_only(toy_ctx):
    result = solve_exact(ScoreTable(toy_ctx, 1.0), Params.create(2, 1.0, 0.5))
    assert result.members == toy_ids("p6", "p7")


def test_toy_higher_relevance_weight(toy_table):
    # With the fixture distances this weight still prefers {p7, p5}
    result = solve_exact(toy_table, Params.create(2, 0.5, 0.6))

    assert result.members == toy_ids("p7", "p5")
    assert result.total == pytest.approx(1.369241, abs=1e-6)


def test_toy_relevance_dominated(toy_table):
    assert solve_exact(toy_table, Params.create(2, 0.5, 0.99)).members == toy_ids("p8", "p7")
    assert solve_exact(toy_table, Params.create(3, 0.5, 1 - 1e-6)).members == toy_ids("p8", "p7", "p6")


def test_k_above_candidate_count_is_rejected(toy_table):
    with pytest.raises(DomainError):
        solve_exact(toy_table, Params.create(11, 0.5, 0.5))


def test_k_equal_to_candidate_count_returns_everything(toy_table):
    result = solve_exact(toy_table, Params.create(10, 0.5, 0.5))
    assert result.members == tuple(range(10))


def test_state_budget_returns_the_incumbent(toy_table, toy_params):
    result = solve_exact(toy_table, toy_params, max_states=1)

    assert result.telemetry["exhausted"]
    assert result.telemetry["states_expanded"] == 1
    assert len(result.members) == 2


def test_oracle_equivalence():
    for seed in range(ORACLE_INSTANCES):
        table, params = random_instance(seed)

        oracle = brute_force(table, params)
        pruned = solve_exact(table, params)
        unpruned = solve_exact(table, params, use_pruning=False)

        assert pruned.total == oracle.total, f"seed {seed}"
        assert pruned.members == oracle.members, f"seed {seed}"
        assert unpruned.total == oracle.total, f"seed {seed}"


def test_pruning_never_expands_more_states():
    for seed in range(100):
        table, params = random_instance(seed)

        pruned = solve_exact(table, params)
        unpruned = solve_exact(table, params, use_pruning=False)

        assert unpruned.telemetry["states_expanded"] == math.comb(table.ctx.size, params.k)
        assert pruned.telemetry["states_expanded"] <= unpruned.telemetry["states_expanded"]


def test_unpruned_run_reports_no_prunes(toy_table, toy_params):
    telemetry = solve_exact(toy_table, toy_params, use_pruning=False).telemetry

    assert telemetry["pruned_property1"] == 0
    assert telemetry["pruned_property2"] == 0
    assert telemetry["states_expanded"] == 45


def test_exact_is_deterministic(toy_table, toy_params):
    first = solve_exact(toy_table, toy_params)
    second = solve_exact(toy_table, toy_params)

    assert first.members == second.members
    assert {key: value for key, value in first.telemetry.items() if key != "wall_ms"} == \
           {key: value for key, value in second.telemetry.items() if key != "wall_ms"}
