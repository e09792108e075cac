import math
from enum import Enum
from typing import Iterable

from algo_code.context import QueryContext
from algo_code.scoring import jaccard_similarity
from utils.errors import DomainError


class MmdMode(str, Enum):
    SPATIAL = "spatial"
    SOCIO_SPATIAL = "socio-spatial"


def precision(selected: Iterable, exact: Iterable) -> float:
    """
    Share of the exact answer recovered by another answer of the same size.
    """
    selected, exact = set(selected), set(exact)
    if len(selected) != len(exact) or not exact:
        raise DomainError(f"precision needs two non-empty sets of equal size, got {len(selected)} and {len(exact)}")

    return len(selected & exact) / len(exact)


def socio_spatial_distance(ctx: QueryContext, location_a, location_b, alpha: float) -> float:
    """
    D_ss between any two locations a friend or the query user visited. Visitor sets come from u's friends at each location and the spatial
    part is normalized by the context's maxD, so for two candidates this equals the scoring layer's pair diversity.
    """
    if location_a == location_b:
        return 0.0

    visitors_a = ctx.location_visitors.get(location_a, frozenset())
    visitors_b = ctx.location_visitors.get(location_b, frozenset())
    social = 1.0 - jaccard_similarity(visitors_a, visitors_b)
    spatial = ctx.distance(location_a, location_b) / ctx.max_d if ctx.max_d > 0.0 else 0.0

    return alpha * social + (1.0 - alpha) * spatial


def friend_distance_to_set(ctx: QueryContext, friend, selected: tuple, mode: MmdMode = MmdMode.SPATIAL, alpha: float = 0.5) -> float:
    if mode == MmdMode.SPATIAL:
        return min(ctx.distance(location, member) for location in ctx.friend_locations[friend] for member in selected)

    return min(socio_spatial_distance(ctx, location, member, alpha) for location in ctx.friend_locations[friend] for member in selected)


def mmd(ctx: QueryContext, selected: Iterable, mode: MmdMode = MmdMode.SPATIAL, alpha: float = 0.5) -> float:
    """
    Mean of minimum diversity: for every scoring friend the smallest distance between one of their check-ins and the selected set, averaged
    over the friends.

    Args:
        ctx: Query context
        selected: The selected locations (non-empty)
        mode: Spatial metric distance or socio-spatial D_ss
        alpha: Social weight of the socio-spatial mode

    Returns:
        float: The mean, 0 when every friend checked in at a selected location
    """
    selected = tuple(selected)
    if not selected:
        raise DomainError("MMD of an empty set is undefined")

    mode = MmdMode(mode)
    return math.fsum(friend_distance_to_set(ctx, friend, selected, mode, alpha) for friend in ctx.friends) / len(ctx.friends)


def social_coverage(ctx: QueryContext, selected: Iterable, theta: float) -> float:
    """
    Percentage of scoring friends with a check-in within theta of the selected set. Theta is in the metric's unit (km for haversine).
    """
    selected = tuple(selected)
    if theta < 0.0:
        raise DomainError(f"theta must be non-negative, got {theta}")

    covered = sum(1 for friend in ctx.friends if friend_distance_to_set(ctx, friend, selected) <= theta)
    return covered / len(ctx.friends) * 100.0


def social_entropy(ctx: QueryContext, selected: Iterable) -> float:
    """
    Entropy in bits of the visitor-count distribution over the selected locations. Locations without visitors add nothing, and a set with no
    visitors at all has entropy 0.
    """
    counts = [len(ctx.visitor_sets[location]) for location in selected]
    total = sum(counts)
    if total == 0:
        return 0.0

    return -math.fsum((count / total) * math.log2(count / total) for count in counts if count > 0)


def entropy_is_degenerate(ctx: QueryContext, selected: Iterable) -> bool:
    return sum(len(ctx.visitor_sets[location]) for location in selected) == 0
