from typing import Hashable, Optional, TextIO, Union

import numpy as np
import yaml

from algo_code.datatypes import DistanceMetric
from algo_code.distance import distance_matrix, max_pairwise_distance, point_distance
from algo_code.graph import SocioSpatialGraph
from utils.errors import DataError, DomainError, QueryIneligibleError
from utils.logger import logger, make_set_width

FIXTURE_VERSION = 1

# Candidate sets up to this size keep their full distance matrix in memory
DEFAULT_MATRIX_LIMIT = 2048


class QueryContext:
    """
    Everything the scoring layer needs to know about one query user: the candidate locations L_u (ascending id order), the scoring friends V_u,
    the visitor set of every location a friend visited, the friend-to-candidate minimum distances and the two normalizers d_m and maxD.

    Location ids are opaque hashables that sort; for graph contexts they are the dataset location ids, for fixtures they are positions in the
    fixture's candidate list.
    """

    def __init__(self, query_user: Hashable,
                 candidates: list,
                 labels: dict,
                 friends: list,
                 friend_locations: dict,
                 metric: DistanceMetric,
                 coordinates: Optional[dict] = None,
                 injected_distances: Optional[np.ndarray] = None,
                 matrix_limit: int = DEFAULT_MATRIX_LIMIT):

        if not candidates:
            raise QueryIneligibleError(f"user {query_user} has no candidate locations")
        if len(set(candidates)) != len(candidates):
            raise DataError(f"candidate locations of user {query_user} are not distinct")

        self.query_user = query_user
        self.candidates: tuple = tuple(candidates)
        self.labels: dict = dict(labels)
        self.friends: tuple = tuple(friends)
        self.friend_locations: dict = {friend: tuple(sorted(set(friend_locations[friend]))) for friend in self.friends}
        self.metric = metric
        self.coordinates = coordinates

        self.index_of: dict = {location: index for index, location in enumerate(self.candidates)}

        # Visitor sets over every location a friend checked in at, candidates or not. Candidates nobody visited map to an empty set.
        location_visitors: dict = {}
        for friend in self.friends:
            for location in self.friend_locations[friend]:
                location_visitors.setdefault(location, set()).add(friend)
        self.location_visitors: dict = {location: frozenset(visitors) for location, visitors in location_visitors.items()}
        self.visitor_sets: dict = {location: self.location_visitors.get(location, frozenset()) for location in self.candidates}

        if metric == DistanceMetric.INJECTED_MATRIX:
            if injected_distances is None:
                raise DataError("the injected-matrix metric needs an explicit distance matrix")
            self.candidate_distances: Optional[np.ndarray] = np.asarray(injected_distances, dtype=float)
            self.max_d = float(self.candidate_distances.max()) if len(self.candidates) > 1 else 0.0
        else:
            if coordinates is None:
                raise DataError(f"the {metric.value} metric needs location coordinates")
            points = np.array([coordinates[location] for location in self.candidates], dtype=float)
            if len(self.candidates) <= matrix_limit:
                matrix = distance_matrix(points, points, metric)
                self.candidate_distances = np.minimum(matrix, matrix.T)
                np.fill_diagonal(self.candidate_distances, 0.0)
                self.max_d = float(self.candidate_distances.max())
            else:
                self.candidate_distances = None
                self.max_d = max_pairwise_distance(points, metric)

        self.mindist: np.ndarray = self._compute_mindist()
        self.d_m: dict = {location: float(self.mindist[index].max()) for index, location in enumerate(self.candidates)}

    def __repr__(self):
        return f"QueryContext(user={self.query_user}, candidates={len(self.candidates)}, friends={len(self.friends)}, metric={self.metric.value})"

    @property
    def size(self) -> int:
        return len(self.candidates)

    def distance(self, first, second) -> float:
        """
        Distance between two locations under the active metric. Candidates use the precomputed matrix when there is one; other locations (a
        friend's check-in outside L_u) fall back to their coordinates.
        """
        if first == second:
            return 0.0

        if self.candidate_distances is not None and first in self.index_of and second in self.index_of:
            return float(self.candidate_distances[self.index_of[first], self.index_of[second]])

        if self.coordinates is None:
            raise DataError(f"no distance available between locations {first} and {second}")

        return point_distance(self.coordinates[first], self.coordinates[second], self.metric)

    def mindist_of(self, location, friend) -> float:
        return float(self.mindist[self.index_of[location], self.friends.index(friend)])

    def _compute_mindist(self) -> np.ndarray:
        mindist = np.zeros((len(self.candidates), len(self.friends)), dtype=float)

        if self.metric == DistanceMetric.INJECTED_MATRIX:
            for column, friend in enumerate(self.friends):
                friend_columns = [self.index_of[location] for location in self.friend_locations[friend]]
                mindist[:, column] = self.candidate_distances[:, friend_columns].min(axis=1)
        else:
            points = np.array([self.coordinates[location] for location in self.candidates], dtype=float)
            for column, friend in enumerate(self.friends):
                friend_points = np.array([self.coordinates[location] for location in self.friend_locations[friend]], dtype=float)
                mindist[:, column] = distance_matrix(points, friend_points, self.metric).min(axis=1)

        # A check-in exactly at the location is distance zero under every metric
        for column, friend in enumerate(self.friends):
            for location in self.friend_locations[friend]:
                if location in self.index_of:
                    mindist[self.index_of[location], column] = 0.0

        return mindist


def build_query_context(graph: SocioSpatialGraph, user: int, metric: Union[str, DistanceMetric] = DistanceMetric.HAVERSINE_KM,
                        min_friends: int = 1, matrix_limit: int = DEFAULT_MATRIX_LIMIT) -> QueryContext:
    """
    Assembles the query context of a user from the graph. V_u is the set of friends with at least one check-in, since a friend without
    check-ins has no distance to anything.

    Args:
        graph: The loaded graph
        user: The query user
        metric: Distance metric used for mindist, d_m and maxD
        min_friends: Minimum size of V_u for the user to be queryable
        matrix_limit: Largest candidate set that keeps a full distance matrix

    Returns:
        QueryContext: The context consumed by the scoring layer and every solver
    """
    metric = DistanceMetric.create(metric)
    if metric == DistanceMetric.INJECTED_MATRIX:
        raise DomainError("graph contexts need a coordinate metric, injected distances only come from fixtures")

    candidates = graph.distinct_locations(user)
    if not candidates:
        raise QueryIneligibleError(f"user {user} has no check-ins")

    friends = sorted(friend for friend in graph.friends_of(user) if graph.checkins[friend])
    if len(friends) < max(1, min_friends):
        raise QueryIneligibleError(f"user {user} has {len(friends)} friends with check-ins, at least {max(1, min_friends)} needed")

    friend_locations = {friend: [checkin.location_id for checkin in graph.checkins[friend]] for friend in friends}

    relevant_locations = set(candidates)
    for locations in friend_locations.values():
        relevant_locations.update(locations)
    coordinates = {location: graph.locations[location] for location in relevant_locations}

    context = QueryContext(user, candidates, {location: str(location) for location in candidates}, friends, friend_locations, metric,
                           coordinates=coordinates, matrix_limit=matrix_limit)

    logger.debug(f"\t{make_set_width(user)}\tBuilt {context}, maxD={context.max_d:.6f}")

    return context


def load_toy_fixture(source: Union[str, TextIO]) -> QueryContext:
    """
    Builds a context from a fixture document that injects the candidate distance matrix and the visitor sets directly. Candidate labels are
    kept for display and location ids are the positions in the `candidates` list.
    """
    if isinstance(source, str):
        try:
            with open(source, "r", encoding="utf-8") as fixture_file:
                document = yaml.safe_load(fixture_file)
        except FileNotFoundError:
            raise DataError("fixture file not found", source)
    else:
        document = yaml.safe_load(source)

    if not isinstance(document, dict):
        raise DataError("fixture must be a mapping")
    if document.get("fixture_version") != FIXTURE_VERSION:
        raise DataError(f"unsupported fixture_version {document.get('fixture_version')!r}, expected {FIXTURE_VERSION}")

    try:
        candidate_labels = [str(label) for label in document["candidates"]]
        friends = [str(friend) for friend in document["friends"]]
        visitor_sets = {str(label): [str(friend) for friend in visitors] for label, visitors in (document.get("visitor_sets") or {}).items()}
        matrix = np.array(document["distance_matrix"], dtype=float)
    except (KeyError, TypeError, ValueError) as error:
        raise DataError(f"malformed fixture: {error!r}")

    n = len(candidate_labels)
    if len(set(candidate_labels)) != n:
        raise DataError("fixture candidates are not distinct")
    if matrix.shape != (n, n):
        raise DataError(f"distance_matrix must be {n}x{n}, got {matrix.shape}")
    if (matrix < 0).any():
        raise DataError("distance_matrix has negative distances")
    if not np.array_equal(matrix, matrix.T):
        raise DataError("distance_matrix is not symmetric")
    if np.diagonal(matrix).any():
        raise DataError("distance_matrix diagonal must be zero")

    location_of = {label: index for index, label in enumerate(candidate_labels)}
    unknown = set(visitor_sets) - set(location_of)
    if unknown:
        raise DataError(f"visitor_sets reference unknown candidates {sorted(unknown)}")

    friend_locations: dict = {friend: [] for friend in friends}
    for label, visitors in visitor_sets.items():
        for friend in visitors:
            if friend not in friend_locations:
                raise DataError(f"visitor {friend!r} of {label} is not in the friend list")
            friend_locations[friend].append(location_of[label])

    # Same rule as graph contexts: only friends with check-ins score
    scoring_friends = [friend for friend in friends if friend_locations[friend]]
    if not scoring_friends:
        raise QueryIneligibleError("fixture has no friend with check-ins")

    return QueryContext(document.get("name", "fixture"), list(range(n)), dict(enumerate(candidate_labels)), scoring_friends,
                        {friend: friend_locations[friend] for friend in scoring_friends}, DistanceMetric.INJECTED_MATRIX,
                        injected_distances=matrix)
