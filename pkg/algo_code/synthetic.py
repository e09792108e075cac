from typing import Optional

import numpy as np

from algo_code.context import QueryContext, build_query_context
from algo_code.datatypes import CheckIn, DistanceMetric
from algo_code.graph import SocioSpatialGraph

QUERY_USER = 0


def make_synthetic_graph(n_locations: int, n_friends: int = 8, seed: int = 0, extra_locations: Optional[int] = None,
                         max_friend_checkins: int = 6, extent: float = 100.0) -> SocioSpatialGraph:
    """
    Seeded random socio-spatial graph on a planar square. User 0 checks in at locations 0..n_locations-1, which become its candidates; the
    friends check in at random locations drawn from the whole pool, so some candidates end up without visitors and some friends visit places
    outside the candidate set.

    Args:
        n_locations: Number of candidate locations of the query user
        n_friends: Number of friends of the query user, all with at least one check-in
        seed: Seed of the numpy generator
        extra_locations: Locations only friends visit (defaults to half the candidate count plus five)
        max_friend_checkins: Upper bound on distinct locations per friend
        extent: Side of the square holding the coordinates

    Returns:
        SocioSpatialGraph: Graph with the query user 0 and friends 1..n_friends
    """
    rng = np.random.default_rng(seed)
    extra_locations = n_locations // 2 + 5 if extra_locations is None else extra_locations
    pool_size = n_locations + extra_locations

    coordinates = np.round(rng.uniform(0.0, extent, size=(pool_size, 2)), 6)

    graph = SocioSpatialGraph()
    for location in range(n_locations):
        graph.add_checkin(QUERY_USER, CheckIn.create(location, coordinates[location, 0], coordinates[location, 1]))

    for friend in range(1, n_friends + 1):
        graph.add_edge(QUERY_USER, friend)

        visit_count = int(rng.integers(1, min(max_friend_checkins, pool_size) + 1))
        # Friends lean towards the candidate area so visitor sets overlap
        weights = np.where(np.arange(pool_size) < n_locations, 2.0, 1.0)
        visits = rng.choice(pool_size, size=visit_count, replace=False, p=weights / weights.sum())
        for location in sorted(int(visit) for visit in visits):
            graph.add_checkin(friend, CheckIn.create(location, coordinates[location, 0], coordinates[location, 1]))

    for friend_a in range(1, n_friends + 1):
        for friend_b in range(friend_a + 1, n_friends + 1):
            if rng.random() < 0.2:
                graph.add_edge(friend_a, friend_b)

    return graph


def make_synthetic_context(n_locations: int, seed: int = 0, n_friends: Optional[int] = None, **kwargs) -> QueryContext:
    n_friends = n_friends if n_friends is not None else int(np.random.default_rng(seed + 7919).integers(3, 9))
    graph = make_synthetic_graph(n_locations, n_friends=n_friends, seed=seed, **kwargs)

    return build_query_context(graph, QUERY_USER, DistanceMetric.PLANAR)
