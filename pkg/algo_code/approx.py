import math

from algo_code.datatypes import Params, SelectionResult
from algo_code.exact import ExactSolver
from algo_code.scoring import ScoreTable


def d_lower_bound(table: ScoreTable, partial: tuple, score: float, remaining: tuple, best_score: float, params: Params) -> float:
    """
    Per-location diversity threshold d̂↓ of the approximate search:
    [F(S_b) - F(S_I) - ω * (top k - |S_I| relevances of S_R)] / [(1 - ω) * (k - |S_I|)].
    """
    need = params.k - len(partial)
    relevance_max = math.fsum(table.relevance[location] for location in remaining[:need])

    return (best_score - score - params.omega * relevance_max) / ((1.0 - params.omega) * need)


def prune_or_terminate(table: ScoreTable, partial: tuple, score: float, remaining: tuple, best_score: float, params: Params) -> tuple:
    """
    Drops every remaining location whose diversity to S_I is at or below d̂↓. When nothing is left the branch is terminated.

    Returns:
        tuple: (kept, pruned, terminated)
    """
    threshold = d_lower_bound(table, partial, score, remaining, best_score, params)

    kept, pruned = [], []
    for location in remaining:
        (kept if table.div_to_set(location, partial) > threshold else pruned).append(location)

    return tuple(kept), tuple(pruned), not kept


class ApproxSolver(ExactSolver):
    """
    The exact search with the post-feasible bound swapped for d̂↓ once S_I holds two or more locations. A single D(l', S_I) per remaining
    location replaces the D̂ evaluation, so the result is no longer guaranteed optimal.
    """
    name = "approx"

    def _initial_telemetry(self) -> dict:
        telemetry = super()._initial_telemetry()
        telemetry.update({"terminated_branches": 0, "pruned_threshold": 0, "d_evals": 0})
        return telemetry

    def _prune_with_incumbent(self, partial: tuple, min_divs: tuple, score: float, remaining: tuple) -> tuple:
        if len(partial) < 2:
            return super()._prune_with_incumbent(partial, min_divs, score, remaining)

        if len(partial) >= self.params.k or len(partial) + len(remaining) < self.params.k:
            return remaining

        self.telemetry["d_evals"] += len(remaining)
        kept, pruned, terminated = prune_or_terminate(self.table, partial, score, remaining, self.best.total, self.params)
        self.telemetry["pruned_threshold"] += len(pruned)
        if terminated:
            self.telemetry["terminated_branches"] += 1

        return kept


def solve_approx(table: ScoreTable, params: Params, max_states: int = 0) -> SelectionResult:
    return ApproxSolver(table, params, max_states=max_states).solve()
