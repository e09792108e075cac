import heapq
import itertools
import math
import time
from typing import Optional

from algo_code.datatypes import Params, SearchState, SelectionResult, SetScore
from algo_code.scoring import ScoreTable, is_better_set
from utils.errors import DomainError
from utils.logger import logger, make_set_width

# Post-feasible pruning removes a location only when it is below the threshold by more than this, so equal-score optima reach the tie-break
PRUNE_MARGIN = 1e-9


def check_feasible(table: ScoreTable, params: Params):
    if params.k > table.ctx.size:
        raise DomainError(f"k={params.k} exceeds the {table.ctx.size} candidate locations of user {table.ctx.query_user}")


def d_hat_cap_lower_bound(table: ScoreTable, partial: tuple, min_divs: tuple, remaining: tuple, params: Params) -> float:
    """
    Lower bound D̂↓ on the updated diversity of the intermediate set below which inserting a remaining location cannot give a positive
    score gain: D(S_I) - max d̂ - (ω / (1 - ω)) * max R over S_R.

    Args:
        table: Score table of the query
        partial: The intermediate set S_I (non-empty)
        min_divs: Per-member minimum diversities of S_I
        remaining: The remaining locations S_R (non-empty, relevance-descending)
        params: Query parameters

    Returns:
        float: The bound, negative whenever S_I is a singleton
    """
    set_diversity = math.fsum(min_divs) if len(partial) > 1 else 0.0
    d_hat_max = max(table.div_to_set(location, partial) for location in remaining)
    relevance_max = table.relevance[remaining[0]]

    return set_diversity - d_hat_max - (params.omega / (1.0 - params.omega)) * relevance_max


def prune_pre_feasible(table: ScoreTable, partial: tuple, min_divs: tuple, remaining: tuple, params: Params) -> tuple:
    """
    Pre-feasible pruning. Splits S_R into the locations that stay eligible and the ones whose updated set diversity D̂ is at or below D̂↓.

    Returns:
        tuple: (kept, pruned), both in the original relevance order
    """
    if not partial or not remaining or len(partial) < 2:
        return tuple(remaining), ()

    bound = d_hat_cap_lower_bound(table, partial, min_divs, remaining, params)
    if bound < 0.0:
        return tuple(remaining), ()

    kept, pruned = [], []
    for location in remaining:
        _, d_hat_cap, _ = table.updated_set_diversity(partial, min_divs, location)
        (pruned if d_hat_cap <= bound else kept).append(location)

    return tuple(kept), tuple(pruned)


def post_feasible_threshold(table: ScoreTable, partial: tuple, remaining: tuple, best_score: float, params: Params) -> float:
    """
    D̂⇓: [F(S_b) - ω * (R(S_I) + R^Max)] / (1 - ω) - D^Max, with R^Max the top (k - |S_I|) relevances of S_R and D^Max the top (k - |S_I|)
    diversities D(l', S_I) over S_R.
    """
    need = params.k - len(partial)
    relevance_max = math.fsum(table.relevance[location] for location in remaining[:need])
    diversity_max = math.fsum(sorted((table.div_to_set(location, partial) for location in remaining), reverse=True)[:need])

    return (best_score - params.omega * (table.relevance_sum(partial) + relevance_max)) / (1.0 - params.omega) - diversity_max


def prune_post_feasible(table: ScoreTable, partial: tuple, min_divs: tuple, remaining: tuple, best_score: float, params: Params) -> tuple:
    """
    Post-feasible pruning. Removes every location whose D̂ falls below D̂⇓; no k-set through such a location can reach the incumbent score.

    Returns:
        tuple: (kept, pruned)
    """
    if not partial or len(partial) >= params.k or len(partial) + len(remaining) < params.k:
        return tuple(remaining), ()

    threshold = post_feasible_threshold(table, partial, remaining, best_score, params)

    kept, pruned = [], []
    for location in remaining:
        _, d_hat_cap, _ = table.updated_set_diversity(partial, min_divs, location)
        (pruned if d_hat_cap < threshold - PRUNE_MARGIN else kept).append(location)

    return tuple(kept), tuple(pruned)


class ExactSolver:
    """
    Best-first branch and bound over (S_I, S_R) states. A popped state is walked down greedily: the head of S_R joins S_I while the branch
    without it goes back into the queue, until S_I holds k locations. Before an incumbent exists, pre-feasible pruning keeps ineligible locations out of
    the walk (their branches are queued, not dropped); afterwards post-feasible pruning removes locations that cannot lead past the incumbent.

    The queue pops the highest F(S_I) first, then the larger S_I, then the oldest state.
    """
    name = "exact"

    def __init__(self, table: ScoreTable, params: Params, use_pruning: bool = True, max_states: int = 0):
        check_feasible(table, params)

        self.table = table
        self.params = params
        self.use_pruning = use_pruning
        self.max_states = max_states

        self.best: Optional[SetScore] = None
        self.telemetry: dict = self._initial_telemetry()

        self._queue: list = []
        self._counter = itertools.count()

    def _initial_telemetry(self) -> dict:
        return {
            "states_expanded": 0,
            "pruned_property1": 0,
            "pruned_property2": 0,
            "d_hat_evals": 0,
            "incumbent_updates": 0,
            "exhausted": False,
        }

    def solve(self) -> SelectionResult:
        start_time = time.perf_counter()
        lookups_before = self.table.pair_lookups

        self._push(SearchState.create((), self.table.relevance_order, 0.0, ()))

        while self._queue:
            if self.max_states and self.telemetry["states_expanded"] >= self.max_states and self.best is not None:
                self.telemetry["exhausted"] = True
                logger.warning(f"\t{make_set_width(self.name)}\t{make_set_width(self.table.ctx.query_user)}\tState budget of "
                               f"{self.max_states} exhausted, returning the incumbent")
                break

            _, _, _, state = heapq.heappop(self._queue)
            self.telemetry["states_expanded"] += 1
            self._expand(state)

        self.telemetry["pair_evals"] = self.table.pair_lookups - lookups_before
        self.telemetry["wall_ms"] = (time.perf_counter() - start_time) * 1000

        logger.debug(f"\t{make_set_width(self.name)}\t{make_set_width(self.table.ctx.query_user)}\tF={self.best.total:.6f} "
                     f"members={sorted(self.best.members)} telemetry={self.telemetry}")

        return SelectionResult.create(self.name, self.best, self.table.ctx.labels, self.telemetry)

    def _push(self, state: SearchState):
        heapq.heappush(self._queue, (-state.score, -len(state.partial), next(self._counter), state))

    def _offer(self, candidate: SetScore):
        if is_better_set(candidate.total, candidate.members, self.best.total if self.best else None, self.best.members if self.best else None):
            self.best = candidate
            self.telemetry["incumbent_updates"] += 1
            logger.debug(f"\t{make_set_width(self.name)}\t{make_set_width(self.table.ctx.query_user)}\tNew incumbent "
                         f"{sorted(candidate.members)} F={candidate.total:.6f}")

    def _push_inclusion(self, partial: tuple, min_divs: tuple, location, rest: tuple):
        """
        Queues the branch S_I + location over `rest`, or scores it directly when it is already a k-set.
        """
        if len(partial) + 1 + len(rest) < self.params.k:
            return

        extended = self.table.extend(partial, min_divs, location, self.params.omega)
        if len(extended.members) == self.params.k:
            self._offer(extended)
        else:
            self._push(SearchState.create(extended.members, rest, extended.total, extended.per_member_min_div))

    def _prune(self, partial: tuple, min_divs: tuple, score: float, remaining: tuple) -> tuple:
        """
        Returns the remaining locations to keep and the locations to leave out of the current walk.
        """
        if not self.use_pruning or not partial or not remaining:
            return remaining, frozenset()

        if self.best is None:
            if len(partial) < 2:
                return remaining, frozenset()
            self.telemetry["d_hat_evals"] += len(remaining)
            _, deferred = prune_pre_feasible(self.table, partial, min_divs, remaining, self.params)
            return remaining, frozenset(deferred)

        return self._prune_with_incumbent(partial, min_divs, score, remaining), frozenset()

    def _prune_with_incumbent(self, partial: tuple, min_divs: tuple, score: float, remaining: tuple) -> tuple:
        if len(partial) >= self.params.k or len(partial) + len(remaining) < self.params.k:
            return remaining

        self.telemetry["d_hat_evals"] += len(remaining)
        kept, pruned = prune_post_feasible(self.table, partial, min_divs, remaining, self.best.total, self.params)
        self.telemetry["pruned_property2"] += len(pruned)

        return kept

    def _expand(self, state: SearchState):
        k = self.params.k
        partial, remaining, score, min_divs = state.partial, state.remaining, state.score, state.min_divs

        if len(partial) >= k:
            return

        # The incumbent may have improved since the state was queued
        remaining, deferred = self._prune(partial, min_divs, score, remaining)

        while len(partial) < k and len(partial) + len(remaining) >= k:
            head, rest = remaining[0], remaining[1:]

            if head in deferred:
                self.telemetry["pruned_property1"] += 1
                self._push_inclusion(partial, min_divs, head, rest)
                remaining = rest
                continue

            if len(partial) + len(rest) >= k:
                self._push(SearchState.create(partial, rest, score, min_divs))

            extended = self.table.extend(partial, min_divs, head, self.params.omega)
            partial, min_divs, score = extended.members, extended.per_member_min_div, extended.total
            remaining = rest

            if len(partial) == k:
                self._offer(extended)
                break

            remaining, deferred = self._prune(partial, min_divs, score, remaining)


def solve_exact(table: ScoreTable, params: Params, use_pruning: bool = True, max_states: int = 0) -> SelectionResult:
    return ExactSolver(table, params, use_pruning=use_pruning, max_states=max_states).solve()
