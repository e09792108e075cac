import math
import os
import time
from typing import Optional

import yaml

from algo_code.datatypes import Params, SelectionResult, SetScore
from algo_code.exact import check_feasible
from algo_code.scoring import ScoreTable, is_better_set
from utils.logger import logger, make_set_width

# Slack on the potential-location test; only absorbs rounding in the bound itself
POTENTIAL_TOLERANCE = 1e-12

FAST_ROOTS = 2


def relevance_lower_bound(table: ScoreTable, partial: tuple, min_divs: tuple, l_ref, remaining: tuple, params: Params,
                          strict_singleton_bound: bool = False) -> float:
    """
    R↓: the relevance a remaining location needs to possibly beat extending S_I with l_ref.
    R(l_ref) + ((1 - ω) / ω) * (D(S_I + l_ref) - D(S_I) - D_max), with D_max the largest D(l', S_I) over S_R.

    For a single-location S_I the bracket is D(l_ref, S_I) - D_max. With strict_singleton_bound the bracket is doubled, which matches the
    diversity of a two-location set and makes the bound safe.
    """
    d_max = max(table.div_to_set(location, partial) for location in remaining)
    factor = (1.0 - params.omega) / params.omega

    if len(partial) == 1:
        bracket = table.pair_diversity(l_ref, partial[0]) - d_max
        if strict_singleton_bound:
            bracket *= 2.0
    else:
        d_hat, d_hat_cap, _ = table.updated_set_diversity(partial, min_divs, l_ref)
        bracket = (d_hat + d_hat_cap) - math.fsum(min_divs) - d_max

    return table.relevance[l_ref] + factor * bracket


def potential_locations(table: ScoreTable, remaining: tuple, r_lower: float) -> tuple:
    """
    Potential locations: the remaining locations whose relevance reaches R↓. The head of S_R always qualifies.
    """
    potential = tuple(location for location in remaining if table.relevance[location] >= r_lower - POTENTIAL_TOLERANCE)
    assert potential and potential[0] == remaining[0], f"relevance bound {r_lower} excluded the reference location {remaining[0]}"

    return potential


def max_completion_score(table: ScoreTable, partial: tuple, min_divs: tuple, remaining: tuple, params: Params) -> float:
    """
    F_max: the highest score any k-superset of S_I drawn from S_R could reach. A single-location S_I gets the largest D(l', S_I) as the cap on
    its own diversity term, since its member only gains diversity once a second location joins.
    """
    need = params.k - len(partial)
    relevance_max = math.fsum(table.relevance[location] for location in remaining[:need])
    diversities = sorted((table.div_to_set(location, partial) for location in remaining), reverse=True)
    diversity_max = math.fsum(diversities[:need])

    own_diversity = math.fsum(min_divs) if len(partial) > 1 else diversities[0]

    return (params.omega * (table.relevance_sum(partial) + relevance_max)
            + (1.0 - params.omega) * (own_diversity + diversity_max))


def advanced_termination(table: ScoreTable, partial: tuple, min_divs: tuple, remaining: tuple, best_score: float, params: Params) -> bool:
    """
    Advanced termination: stop extending S_I when the incumbent already beats every possible completion. Never fires before a feasible set exists.
    """
    if best_score <= 0.0 or not remaining:
        return False
    return best_score > max_completion_score(table, partial, min_divs, remaining, params)


class ExactPlusSolver:
    """
    Root-by-root greedy search. Roots are taken in relevance order; each root starts S_I and only the locations after it in that order are
    candidates. Every step adds the potential location with the best F(S_I + l) until k locations are chosen or the incumbent makes the root
    hopeless. The best k-set over all roots is returned.

    max_roots limits the number of root iterations (two for the fast approximate variant).
    """

    def __init__(self, table: ScoreTable, params: Params, max_roots: Optional[int] = None, strict_singleton_bound: bool = False,
                 name: str = "exactplus"):
        check_feasible(table, params)

        self.table = table
        self.params = params
        self.max_roots = max_roots
        self.strict_singleton_bound = strict_singleton_bound
        self.name = name

        self.best: Optional[SetScore] = None
        self.telemetry: dict = {
            "roots_total": 0,
            "roots_terminated": 0,
            "greedy_steps": 0,
            "potential_pruned": 0,
            "incumbent_updates": 0,
        }

    def solve(self) -> SelectionResult:
        start_time = time.perf_counter()
        lookups_before = self.table.pair_lookups

        order = self.table.relevance_order
        for position, root in enumerate(order):
            if self.max_roots is not None and self.telemetry["roots_total"] >= self.max_roots:
                break
            if len(order) - position < self.params.k:
                break

            self.telemetry["roots_total"] += 1
            self._process_root(root, order[position + 1:])

        self.telemetry["pair_evals"] = self.table.pair_lookups - lookups_before
        self.telemetry["wall_ms"] = (time.perf_counter() - start_time) * 1000

        logger.debug(f"\t{make_set_width(self.name)}\t{make_set_width(self.table.ctx.query_user)}\tF={self.best.total:.6f} "
                     f"members={sorted(self.best.members)} telemetry={self.telemetry}")

        return SelectionResult.create(self.name, self.best, self.table.ctx.labels, self.telemetry)

    def _process_root(self, root, remaining: tuple):
        k, omega = self.params.k, self.params.omega

        current = self.table.set_score((root,), omega)
        while len(current.members) < k and len(current.members) + len(remaining) >= k:
            partial, min_divs = current.members, current.per_member_min_div

            best_score = self.best.total if self.best is not None else 0.0
            if advanced_termination(self.table, partial, min_divs, remaining, best_score, self.params):
                self.telemetry["roots_terminated"] += 1
                logger.debug(f"\t{make_set_width(self.name)}\t{make_set_width(self.table.ctx.query_user)}\tRoot {root} terminated at "
                             f"{list(partial)}")
                return

            l_ref = remaining[0]
            r_lower = relevance_lower_bound(self.table, partial, min_divs, l_ref, remaining, self.params, self.strict_singleton_bound)
            potential = potential_locations(self.table, remaining, r_lower)
            self.telemetry["potential_pruned"] += len(remaining) - len(potential)

            chosen: Optional[SetScore] = None
            for location in potential:
                extended = self.table.extend(partial, min_divs, location, omega)
                if chosen is None or self._greedy_prefers(extended, location, chosen):
                    chosen = extended

            current = chosen
            remaining = tuple(location for location in remaining if location != chosen.members[-1])
            self.telemetry["greedy_steps"] += 1

        if len(current.members) == k:
            self._offer(current)

    def _greedy_prefers(self, extended: SetScore, location, chosen: SetScore) -> bool:
        if extended.total != chosen.total:
            return extended.total > chosen.total

        chosen_location = chosen.members[-1]
        if self.table.relevance[location] != self.table.relevance[chosen_location]:
            return self.table.relevance[location] > self.table.relevance[chosen_location]

        return location < chosen_location

    def _offer(self, candidate: SetScore):
        if is_better_set(candidate.total, candidate.members, self.best.total if self.best else None, self.best.members if self.best else None):
            self.best = candidate
            self.telemetry["incumbent_updates"] += 1


def solve_exact_plus(table: ScoreTable, params: Params, strict_singleton_bound: bool = False) -> SelectionResult:
    return ExactPlusSolver(table, params, strict_singleton_bound=strict_singleton_bound).solve()


def solve_fast_approx(table: ScoreTable, params: Params, strict_singleton_bound: bool = False) -> SelectionResult:
    return ExactPlusSolver(table, params, max_roots=FAST_ROOTS, strict_singleton_bound=strict_singleton_bound, name="fast").solve()


def audit_exact_plus(table: ScoreTable, params: Params, oracle: SelectionResult, bundle_dir: Optional[str] = None,
                     strict_singleton_bound: bool = False) -> bool:
    """
    Runs the root-by-root search and compares it with an oracle result on the same table. On disagreement a YAML bundle with the context
    slice, the parameters and both answers is written to bundle_dir (when given).

    Returns:
        bool: True when both scores agree
    """
    result = solve_exact_plus(table, params, strict_singleton_bound)
    if result.total == oracle.total:
        return True

    ctx = table.ctx
    logger.warning(f"\t{make_set_width('exactplus')}\t{make_set_width(ctx.query_user)}\tDisagrees with the oracle: "
                   f"{list(result.members)} F={result.total:.12f} vs {list(oracle.members)} F={oracle.total:.12f}")

    if bundle_dir is not None:
        os.makedirs(bundle_dir, exist_ok=True)
        bundle = {
            "friends": [str(friend) for friend in ctx.friends],
            "relevance": {str(ctx.labels[location]): table.relevance[location] for location in ctx.candidates},
            "query_user": str(ctx.query_user),
            "params": {"k": params.k, "alpha": params.alpha, "omega": params.omega},
            "candidates": [str(ctx.labels[location]) for location in ctx.candidates],
            "visitor_sets": {str(ctx.labels[location]): sorted(str(friend) for friend in ctx.visitor_sets[location])
                             for location in ctx.candidates},
            "distance_matrix": [[ctx.distance(first, second) for second in ctx.candidates] for first in ctx.candidates],
            "exactplus": {"members": [str(ctx.labels[location]) for location in result.members], "score": result.total},
            "oracle": {"members": [str(ctx.labels[location]) for location in oracle.members], "score": oracle.total},
        }
        path = os.path.join(bundle_dir, f"counterexample-{ctx.query_user}-k{params.k}-a{params.alpha}-w{params.omega}.yaml")
        with open(path, "w", encoding="utf-8") as bundle_file:
            yaml.safe_dump(bundle, bundle_file, sort_keys=True)

    return False
