import math
from typing import Iterable, Optional, Union

import pandas as pd
import ujson

from algo_code.datatypes import CheckIn
from utils.errors import DataError, NotFoundError
from utils.logger import logger, make_set_width

SNAPSHOT_VERSION = 1

# Tolerance in degrees (or planar units) for the same location id reported at slightly different coordinates
COORDINATE_TOLERANCE = 1e-6

CHECKIN_GROUPS = (50, 100, 200, 500, 1000)
MIN_GROUP_LOCATIONS = 10
FILTERED_OUT = 0


class SocioSpatialGraph:
    """
    The loaded socio-spatial network: users, undirected friendships, check-ins and location coordinates. Built once by the loaders (or from a
    snapshot) and then only read, so one instance can be shared by every query thread.
    """

    def __init__(self):
        self.users: set[int] = set()
        self.social_edges: dict[int, set[int]] = {}
        self.checkins: dict[int, list[CheckIn]] = {}
        self.locations: dict[int, tuple[float, float]] = {}

        self.self_loop_warnings = 0

    def __repr__(self):
        return f"SocioSpatialGraph(users={len(self.users)}, edges={self.edge_count}, checkins={self.checkin_count}, places={len(self.locations)})"

    @property
    def edge_count(self) -> int:
        return sum(len(friends) for friends in self.social_edges.values()) // 2

    @property
    def checkin_count(self) -> int:
        return sum(len(user_checkins) for user_checkins in self.checkins.values())

    def add_user(self, user: int):
        if user not in self.users:
            self.users.add(user)
            self.social_edges.setdefault(user, set())
            self.checkins.setdefault(user, [])

    def add_edge(self, user_a: int, user_b: int):
        self.add_user(user_a)
        self.add_user(user_b)
        self.social_edges[user_a].add(user_b)
        self.social_edges[user_b].add(user_a)

    def register_location(self, location_id: int, latitude: float, longitude: float, source: Optional[str] = None,
                          line: Optional[int] = None):
        """
        Records the coordinate of a location. The first occurrence wins; a later occurrence further than COORDINATE_TOLERANCE away on either
        axis is a data error.
        """
        if not (math.isfinite(latitude) and math.isfinite(longitude)):
            raise DataError(f"non-finite coordinates for location {location_id}: {(latitude, longitude)}", source, line)

        known = self.locations.get(location_id)
        if known is None:
            self.locations[location_id] = (latitude, longitude)
        elif abs(known[0] - latitude) > COORDINATE_TOLERANCE or abs(known[1] - longitude) > COORDINATE_TOLERANCE:
            raise DataError(f"conflicting coordinates for location {location_id}: {known} vs {(latitude, longitude)}", source, line)

    def add_checkin(self, user: int, checkin: CheckIn, source: Optional[str] = None, line: Optional[int] = None):
        self.register_location(checkin.location_id, checkin.latitude, checkin.longitude, source, line)
        self.add_user(user)
        self.checkins[user].append(checkin)

    def friends_of(self, user: int) -> set[int]:
        if user not in self.users:
            raise NotFoundError(f"user {user} is not in the graph")
        return self.social_edges[user]

    def distinct_locations(self, user: int) -> list[int]:
        if user not in self.users:
            raise NotFoundError(f"user {user} is not in the graph")
        return sorted({checkin.location_id for checkin in self.checkins[user]})

    def eligible_users(self, min_locations: int = MIN_GROUP_LOCATIONS, min_friends: int = 2) -> list[int]:
        """
        Users that can be queried in experiments: at least min_locations distinct check-in locations and at least min_friends friends who have
        check-ins themselves.
        """
        eligible = []
        for user in sorted(self.users):
            if len({checkin.location_id for checkin in self.checkins[user]}) < min_locations:
                continue

            active_friends = sum(1 for friend in self.social_edges[user] if self.checkins[friend])
            if active_friends >= min_friends:
                eligible.append(user)

        return eligible

    # Snapshots __________________________________________________________________________________
    def to_document(self) -> dict:
        edges = sorted((user, friend) for user, friends in self.social_edges.items() for friend in friends if user < friend)

        return {
            "snapshot_version": SNAPSHOT_VERSION,
            "users": sorted(self.users),
            "edges": [list(edge) for edge in edges],
            "checkins": [[user, checkin.location_id, checkin.timestamp or ""] for user in sorted(self.checkins)
                         for checkin in self.checkins[user]],
            "locations": [[location_id, *self.locations[location_id]] for location_id in sorted(self.locations)],
        }

    def dumps(self) -> str:
        return ujson.dumps(self.to_document(), sort_keys=True, escape_forward_slashes=False)

    def save_snapshot(self, path: str):
        with open(path, "w", encoding="utf-8", newline="\n") as snapshot_file:
            snapshot_file.write(self.dumps())
            snapshot_file.write("\n")

    @staticmethod
    def from_document(document: dict) -> "SocioSpatialGraph":
        version = document.get("snapshot_version")
        if version != SNAPSHOT_VERSION:
            raise DataError(f"unsupported snapshot version {version!r}, expected {SNAPSHOT_VERSION}")

        graph = SocioSpatialGraph()
        try:
            for user in document["users"]:
                graph.add_user(int(user))
            for user_a, user_b in document["edges"]:
                graph.add_edge(int(user_a), int(user_b))
            for location_id, latitude, longitude in document["locations"]:
                graph.locations[int(location_id)] = (float(latitude), float(longitude))
            for user, location_id, timestamp in document["checkins"]:
                latitude, longitude = graph.locations[int(location_id)]
                graph.add_checkin(int(user), CheckIn.create(location_id, latitude, longitude, timestamp))
        except (KeyError, TypeError, ValueError) as error:
            raise DataError(f"malformed snapshot: {error!r}")

        return graph

    @staticmethod
    def load_snapshot(path: str) -> "SocioSpatialGraph":
        try:
            with open(path, "r", encoding="utf-8") as snapshot_file:
                document = ujson.loads(snapshot_file.read())
        except FileNotFoundError:
            raise DataError("snapshot file not found", path)
        except ValueError as error:
            raise DataError(f"snapshot is not valid JSON: {error}", path)

        return SocioSpatialGraph.from_document(document)

    # Statistics _________________________________________________________________________________
    def statistics(self) -> dict:
        """
        Dataset statistics: Users, Edges, Checkins, Places, AC (average check-ins per user), AF (average friendships per user) and AFC
        (average number of friends that checked in at a place the user checked in).
        """
        user_count = len(self.users)
        edge_count = self.edge_count
        checkin_count = self.checkin_count

        visits = pd.DataFrame([(user, checkin.location_id) for user, user_checkins in self.checkins.items() for checkin in user_checkins],
                              columns=["user", "location"]).drop_duplicates()
        friendships = pd.DataFrame([(user, friend) for user, friends in self.social_edges.items() for friend in friends],
                                   columns=["user", "friend"])

        co_located = (friendships.merge(visits, on="user")
                      .merge(visits.rename(columns={"user": "friend"}), on=["friend", "location"])
                      [["user", "friend"]].drop_duplicates())

        return {
            "Users": user_count,
            "Edges": edge_count,
            "Checkins": checkin_count,
            "Places": len(self.locations),
            "AC": checkin_count / user_count if user_count else 0.0,
            "AF": 2 * edge_count / user_count if user_count else 0.0,
            "AFC": len(co_located) / user_count if user_count else 0.0,
        }


def _split_fields(raw_line: Union[str, bytes], expected: int, source: str, line_number: int) -> Optional[list[str]]:
    if isinstance(raw_line, bytes):
        try:
            raw_line = raw_line.decode("utf-8")
        except UnicodeDecodeError as error:
            raise DataError(f"invalid UTF-8 at byte {error.start}", source, line_number)

    line = raw_line.rstrip("\r\n")
    if not line.strip():
        return None

    fields = line.split("\t")
    if len(fields) != expected:
        raise DataError(f"expected {expected} tab-separated fields, found {len(fields)}", source, line_number)

    return [field.strip() for field in fields]


def load_social_edges(source: Iterable[Union[str, bytes]], graph: Optional[SocioSpatialGraph] = None,
                      source_name: str = "edges") -> SocioSpatialGraph:
    """
    Reads `userA<TAB>userB` lines into the graph. Edges are stored in both directions, repeated lines are no-ops and self-loops are skipped
    with a warning.

    Args:
        source: Any iterable of text or UTF-8 byte lines (an open file, a list of strings)
        graph: The graph to extend; a new one is created when omitted
        source_name: Name used in error messages and logs

    Returns:
        SocioSpatialGraph: The updated graph
    """
    graph = graph if graph is not None else SocioSpatialGraph()

    for line_number, raw_line in enumerate(source, start=1):
        fields = _split_fields(raw_line, 2, source_name, line_number)
        if fields is None:
            continue

        try:
            user_a, user_b = int(fields[0]), int(fields[1])
        except ValueError:
            raise DataError(f"user ids must be integers, got {fields}", source_name, line_number)

        if user_a == user_b:
            graph.self_loop_warnings += 1
            logger.warning(f"\t{make_set_width(source_name)}\tSelf-loop for user {user_a} at line {line_number}, skipping...")
            continue

        graph.add_edge(user_a, user_b)

    logger.debug(f"\t{make_set_width(source_name)}\tLoaded edges, graph is now {graph}")

    return graph


def load_checkins(source: Iterable[Union[str, bytes]], graph: Optional[SocioSpatialGraph] = None,
                  source_name: str = "checkins") -> SocioSpatialGraph:
    """
    Reads `user<TAB>timestamp<TAB>lat<TAB>lon<TAB>locid` lines. The timestamp may be empty and unknown users are created on the fly, since
    check-in files may be loaded before the edge file. Coordinates are geographic, so latitudes outside [-90, 90] and longitudes outside
    [-180, 180] are data errors.
    """
    graph = graph if graph is not None else SocioSpatialGraph()

    for line_number, raw_line in enumerate(source, start=1):
        fields = _split_fields(raw_line, 5, source_name, line_number)
        if fields is None:
            continue

        user_field, timestamp, latitude_field, longitude_field, location_field = fields
        try:
            user = int(user_field)
            checkin = CheckIn.create(int(location_field), float(latitude_field), float(longitude_field), timestamp)
        except ValueError:
            raise DataError(f"malformed check-in fields {fields}", source_name, line_number)

        # NaN fails both comparisons, so it lands here too
        if not (-90.0 <= checkin.latitude <= 90.0 and -180.0 <= checkin.longitude <= 180.0):
            raise DataError(f"coordinates out of range: {(checkin.latitude, checkin.longitude)}", source_name, line_number)

        graph.add_checkin(user, checkin, source_name, line_number)

    logger.debug(f"\t{make_set_width(source_name)}\tLoaded check-ins, graph is now {graph}")

    return graph


def load_graph(edges_path: str, checkins_path: str) -> SocioSpatialGraph:
    """
    Loads both files from disk. They are read as bytes and decoded line by line, so a bad byte is reported with its file and line.
    """
    graph = SocioSpatialGraph()

    try:
        with open(checkins_path, "rb") as checkins_file:
            load_checkins(checkins_file, graph, checkins_path)
        with open(edges_path, "rb") as edges_file:
            load_social_edges(edges_file, graph, edges_path)
    except FileNotFoundError as error:
        raise DataError("input file not found", error.filename)

    return graph


def checkin_group(graph: SocioSpatialGraph, user: int) -> Optional[int]:
    """
    The experiment group of a user by number of distinct check-in locations: 10-50 -> 50, 51-100 -> 100, 101-200 -> 200, 201-500 -> 500 and
    501-1000 -> 1000. Users with fewer than ten locations get FILTERED_OUT, users beyond 1000 locations get None.
    """
    location_count = len(graph.distinct_locations(user))

    if location_count < MIN_GROUP_LOCATIONS:
        return FILTERED_OUT

    for group in CHECKIN_GROUPS:
        if location_count <= group:
            return group

    return None
