import itertools
import math
import time
from typing import Optional

import numpy as np

from algo_code.datatypes import GneConfig, Params, SelectionResult, SetScore, SosConfig
from algo_code.exact import check_feasible
from algo_code.scoring import ScoreTable, is_better_set, jaccard_similarity
from utils.errors import DomainError
from utils.logger import logger, make_set_width

DEFAULT_BRUTE_CAP = 2_000_000


def _finish(name: str, table: ScoreTable, best: SetScore, telemetry: dict, start_time: float, lookups_before: int) -> SelectionResult:
    telemetry["pair_evals"] = table.pair_lookups - lookups_before
    telemetry["wall_ms"] = (time.perf_counter() - start_time) * 1000

    logger.debug(f"\t{make_set_width(name)}\t{make_set_width(table.ctx.query_user)}\tF={best.total:.6f} members={sorted(best.members)}")

    return SelectionResult.create(name, best, table.ctx.labels, telemetry)


def _prefer_location(table: ScoreTable, score: float, location, best_score: Optional[float], best_location) -> bool:
    """
    Greedy tie-break: higher score, then higher relevance, then lower location id.
    """
    if best_score is None:
        return True
    if score != best_score:
        return score > best_score
    if table.relevance[location] != table.relevance[best_location]:
        return table.relevance[location] > table.relevance[best_location]
    return location < best_location


def brute_force(table: ScoreTable, params: Params, cap: int = DEFAULT_BRUTE_CAP) -> SelectionResult:
    """
    Scores every k-subset of the candidates. Subsets come in lexicographic id order and only a strictly better score replaces the current
    best, which gives the same tie-break as the exact solver.
    """
    check_feasible(table, params)

    subset_count = math.comb(table.ctx.size, params.k)
    if subset_count > cap:
        raise DomainError(f"brute force refuses {subset_count} subsets (cap {cap})")

    start_time, lookups_before = time.perf_counter(), table.pair_lookups

    best: Optional[SetScore] = None
    for members in itertools.combinations(table.ctx.candidates, params.k):
        score = table.set_score(members, params.omega)
        if best is None or score.total > best.total:
            best = score

    return _finish("brute", table, best, {"subsets_evaluated": subset_count}, start_time, lookups_before)


def gmc(table: ScoreTable, params: Params) -> SelectionResult:
    """
    Greedy marginal contribution: k steps, each adding the location with the largest gain F(S + l) - F(S).
    """
    check_feasible(table, params)
    start_time, lookups_before = time.perf_counter(), table.pair_lookups

    current: Optional[SetScore] = None
    for _ in range(params.k):
        members = current.members if current is not None else ()
        min_divs = current.per_member_min_div if current is not None else ()

        chosen, chosen_location = None, None
        for location in table.relevance_order:
            if location in members:
                continue
            extended = table.extend(members, min_divs, location, params.omega)
            if _prefer_location(table, extended.total, location, chosen.total if chosen else None, chosen_location):
                chosen, chosen_location = extended, location

        current = chosen

    return _finish("gmc", table, current, {"steps": params.k}, start_time, lookups_before)


def _most_diverse_outside(table: ScoreTable, members: tuple):
    chosen_location, chosen_diversity = None, None
    for location in table.relevance_order:
        if location in members:
            continue
        diversity = table.div_to_set(location, members)
        if _prefer_location(table, diversity, location, chosen_diversity, chosen_location):
            chosen_location, chosen_diversity = location, diversity

    return chosen_location


def _gne_restart(table: ScoreTable, params: Params, cfg: GneConfig, pool: tuple, rng: np.random.Generator) -> tuple:
    picks = rng.choice(len(pool), size=params.k, replace=False)
    current = table.set_score(tuple(pool[index] for index in sorted(picks)), params.omega)

    round_scores = [current.total]
    swaps = 0
    for _ in range(cfg.max_swap_rounds):
        improved = False

        for member in tuple(current.members):
            target = _most_diverse_outside(table, current.members)
            if target is None:
                break

            trial = table.set_score(tuple(other for other in current.members if other != member) + (target,), params.omega)
            if trial.total > current.total:
                current = trial
                improved = True
                swaps += 1

        round_scores.append(current.total)
        if not improved:
            break

    return current, round_scores, swaps


def gne(table: ScoreTable, params: Params, cfg: GneConfig = GneConfig()) -> SelectionResult:
    """
    Randomized swap search. A k-set is sampled from the top-ranked pool, then each round tries to swap every member for the candidate most
    diverse to the current set, keeping a swap only when F strictly improves. Each restart draws from its own spawned seed stream.
    """
    check_feasible(table, params)
    start_time, lookups_before = time.perf_counter(), table.pair_lookups

    n = table.ctx.size
    pool_size = min(n, max(params.k, math.ceil(cfg.pool_fraction * n - 1e-9)))
    pool = table.relevance_order[:pool_size]

    best, best_rounds, total_swaps = None, [], 0
    for stream in np.random.SeedSequence(cfg.rng_seed).spawn(cfg.restarts):
        result, round_scores, swaps = _gne_restart(table, params, cfg, pool, np.random.default_rng(stream))
        total_swaps += swaps
        if is_better_set(result.total, result.members, best.total if best else None, best.members if best else None):
            best, best_rounds = result, round_scores

    telemetry = {"pool_size": pool_size, "restarts": cfg.restarts, "swaps": total_swaps, "rounds": len(best_rounds) - 1,
                 "round_scores": best_rounds}

    return _finish("gne", table, best, telemetry, start_time, lookups_before)


def adaptive_sos(table: ScoreTable, params: Params, cfg: SosConfig = SosConfig()) -> SelectionResult:
    """
    Threshold independent set over visitor similarity. Locations are taken in relevance order and skipped when their visitor-set Jaccard
    similarity to an already selected location exceeds the threshold. A shortfall is filled with the most relevant leftovers and flagged as
    relaxed.
    """
    check_feasible(table, params)
    start_time, lookups_before = time.perf_counter(), table.pair_lookups

    visitor_sets = table.ctx.visitor_sets

    selected, conflicts = [], 0
    for location in table.relevance_order:
        if len(selected) == params.k:
            break
        if any(jaccard_similarity(visitor_sets[location], visitor_sets[other]) > cfg.similarity_threshold for other in selected):
            conflicts += 1
            continue
        selected.append(location)

    relaxed = len(selected) < params.k
    if relaxed:
        logger.debug(f"\t{make_set_width('sos')}\t{make_set_width(table.ctx.query_user)}\tOnly {len(selected)} independent locations "
                     f"for k={params.k}, filling by relevance")
        leftovers = [location for location in table.relevance_order if location not in selected]
        selected.extend(leftovers[:params.k - len(selected)])

    best = table.set_score(tuple(selected), params.omega)

    return _finish("sos", table, best, {"relaxed": relaxed, "conflicts_skipped": conflicts}, start_time, lookups_before)
