import math
from typing import Iterable, Optional

import numpy as np

from algo_code.context import DEFAULT_MATRIX_LIMIT, QueryContext
from algo_code.datatypes import SetScore
from utils.errors import DomainError
from utils.logger import logger, make_set_width


# Per-location relevance ______________________________________________________________________________

def social_relevance(ctx: QueryContext, location) -> float:
    """
    Fraction of the scoring friends with a check-in exactly at the location.
    """
    return len(ctx.visitor_sets[location]) / len(ctx.friends)


def spatial_relevance(ctx: QueryContext, location) -> float:
    """
    One minus the mean friend distance to the location, normalized by the farthest friend (d_m). A location where every friend checked in has
    d_m = 0 and scores 1.0.
    """
    d_m = ctx.d_m[location]
    if d_m == 0.0:
        return 1.0

    distances = ctx.mindist[ctx.index_of[location]]
    return 1.0 - math.fsum(distances) / (d_m * len(ctx.friends))


def relevance(ctx: QueryContext, location, alpha: float) -> float:
    return alpha * social_relevance(ctx, location) + (1.0 - alpha) * spatial_relevance(ctx, location)


# Pairwise diversity __________________________________________________________________________________

def jaccard_similarity(visitors_a: frozenset, visitors_b: frozenset) -> float:
    """
    Jaccard similarity of two visitor sets; two empty sets count as identical (similarity 1).
    """
    union = len(visitors_a | visitors_b)
    if union == 0:
        return 1.0
    return len(visitors_a & visitors_b) / union


def social_diversity(ctx: QueryContext, location_a, location_b) -> float:
    if location_a == location_b:
        return 0.0
    return 1.0 - jaccard_similarity(ctx.visitor_sets[location_a], ctx.visitor_sets[location_b])


def spatial_diversity(ctx: QueryContext, location_a, location_b) -> float:
    if location_a == location_b or ctx.max_d == 0.0:
        return 0.0
    return ctx.distance(location_a, location_b) / ctx.max_d


def pair_diversity(ctx: QueryContext, location_a, location_b, alpha: float) -> float:
    """
    Unmemoized socio-spatial diversity of two candidates; ScoreTable.pair_diversity is the cached equivalent the solvers use.
    """
    if location_a == location_b:
        return 0.0
    return alpha * social_diversity(ctx, location_a, location_b) + (1.0 - alpha) * spatial_diversity(ctx, location_a, location_b)


class ScoreTable:
    """
    Relevance of every candidate plus memoized pairwise diversity for one (context, alpha) pair. Candidate sets up to matrix_limit get the
    whole pair matrix up front with numpy, larger ones are filled lazily.

    The table counts every pair diversity request in `pair_lookups`, which the solvers report as `pair_evals`. A table belongs to one query
    and is not shared between threads.
    """

    def __init__(self, ctx: QueryContext, alpha: float, matrix_limit: int = DEFAULT_MATRIX_LIMIT):
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha}")

        self.ctx = ctx
        self.alpha = alpha

        self.social: dict = {location: social_relevance(ctx, location) for location in ctx.candidates}
        self.spatial: dict = {location: spatial_relevance(ctx, location) for location in ctx.candidates}
        self.relevance: dict = {location: alpha * self.social[location] + (1.0 - alpha) * self.spatial[location]
                                for location in ctx.candidates}

        self.relevance_order: tuple = tuple(sorted(ctx.candidates, key=lambda location: (-self.relevance[location], location)))

        self.pair_lookups = 0
        self._pair_cache: dict = {}
        self._pair_matrix: Optional[np.ndarray] = None
        if ctx.size <= matrix_limit and ctx.candidate_distances is not None:
            self._pair_matrix = self._build_pair_matrix()

        logger.debug(f"\t{make_set_width(ctx.query_user)}\tScore table ready, n={ctx.size}, "
                     f"{'matrix' if self._pair_matrix is not None else 'lazy'} pair cache")

    def _build_pair_matrix(self) -> np.ndarray:
        ctx = self.ctx

        membership = np.zeros((ctx.size, len(ctx.friends)), dtype=float)
        friend_column = {friend: column for column, friend in enumerate(ctx.friends)}
        for row, location in enumerate(ctx.candidates):
            for friend in ctx.visitor_sets[location]:
                membership[row, friend_column[friend]] = 1.0

        intersections = membership @ membership.T
        counts = membership.sum(axis=1)
        unions = counts[:, None] + counts[None, :] - intersections
        with np.errstate(divide="ignore", invalid="ignore"):
            social = np.where(unions > 0, 1.0 - intersections / np.where(unions > 0, unions, 1.0), 0.0)

        spatial = ctx.candidate_distances / ctx.max_d if ctx.max_d > 0.0 else np.zeros_like(ctx.candidate_distances)

        pairs = self.alpha * social + (1.0 - self.alpha) * spatial
        pairs = np.minimum(pairs, pairs.T)
        np.fill_diagonal(pairs, 0.0)

        return pairs

    def pair_diversity(self, location_a, location_b) -> float:
        self.pair_lookups += 1

        if location_a == location_b:
            return 0.0

        if self._pair_matrix is not None:
            return float(self._pair_matrix[self.ctx.index_of[location_a], self.ctx.index_of[location_b]])

        key = (location_a, location_b) if location_a < location_b else (location_b, location_a)
        value = self._pair_cache.get(key)
        if value is None:
            value = pair_diversity(self.ctx, key[0], key[1], self.alpha)
            self._pair_cache[key] = value

        return value

    def relevance_sum(self, members: Iterable) -> float:
        return math.fsum(self.relevance[member] for member in members)

    def div_to_set(self, location, members: tuple) -> float:
        """
        The diversity d̂ of a location to a set: its smallest pair diversity to any member.
        """
        if not members:
            raise DomainError("diversity to an empty set is undefined")
        return min(self.pair_diversity(location, member) for member in members)

    def set_score(self, members: Iterable, omega: float) -> SetScore:
        """
        Scores a set from scratch. A singleton has no diversity.
        """
        members = tuple(members)
        if not members:
            raise DomainError("cannot score an empty set")

        if len(members) == 1:
            min_divs = (0.0,)
        else:
            min_divs = tuple(min(self.pair_diversity(member, other) for other in members if other != member) for member in members)

        return SetScore.create(members, tuple(self.relevance[member] for member in members), min_divs, omega)

    def updated_set_diversity(self, members: tuple, min_divs: tuple, location) -> tuple:
        """
        Diversity bookkeeping for inserting a location into a set.

        Args:
            members: The current set S
            min_divs: Per-member minimum diversities of S, aligned with members (ignored for a singleton)
            location: The location l' being inserted

        Returns:
            tuple: (d̂, D̂, new per-member minimums aligned with members + (location,)) where d̂ is the diversity of l' to S and D̂ is the
            updated diversity contribution of the old members.
        """
        if not members:
            raise DomainError("cannot insert into an empty set, its diversity is undefined")
        if location in members:
            raise DomainError(f"location {location} is already in the set")

        pairs = [self.pair_diversity(location, member) for member in members]
        d_hat = min(pairs)

        if len(members) == 1:
            updated = (pairs[0],)
        else:
            updated = tuple(min(previous, pair) for previous, pair in zip(min_divs, pairs))

        return d_hat, math.fsum(updated), updated + (d_hat,)

    def extend(self, members: tuple, min_divs: tuple, location, omega: float) -> SetScore:
        """
        Scores S + l' incrementally from the state of S. The result is bit-identical to set_score on the same members, because both sum the
        same exact per-member minimums with fsum.
        """
        if not members:
            return self.set_score((location,), omega)

        _, _, new_min_divs = self.updated_set_diversity(members, min_divs, location)
        new_members = members + (location,)

        return SetScore.create(new_members, tuple(self.relevance[member] for member in new_members), new_min_divs, omega)


def is_better_set(score: float, members: Iterable, best_score: Optional[float], best_members: Optional[Iterable]) -> bool:
    """
    Incumbent comparison shared by every solver: a higher score wins, equal scores go to the lexicographically smaller sorted id sequence.
    """
    if best_score is None:
        return True
    if score != best_score:
        return score > best_score
    return tuple(sorted(members)) < tuple(sorted(best_members))
