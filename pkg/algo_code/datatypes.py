import math
from enum import Enum
from typing import NamedTuple, Optional, Union

from utils.errors import DataError, DomainError


class DistanceMetric(str, Enum):
    PLANAR = "planar"
    HAVERSINE_KM = "haversine-km"
    INJECTED_MATRIX = "injected-matrix"

    @staticmethod
    def create(value: Union[str, "DistanceMetric"]) -> "DistanceMetric":
        if isinstance(value, DistanceMetric):
            return value
        try:
            return DistanceMetric(str(value).strip().lower())
        except ValueError:
            names = ", ".join(metric.value for metric in DistanceMetric)
            raise DomainError(f"Unknown distance metric {value!r}, expected one of: {names}")


class CheckIn(NamedTuple):
    location_id: int
    latitude: float
    longitude: float
    timestamp: Optional[str]

    @staticmethod
    def create(location_id: int, latitude: float, longitude: float, timestamp: Optional[str] = None):
        return CheckIn(int(location_id), float(latitude), float(longitude), timestamp if timestamp else None)


class Params(NamedTuple):
    k: int
    alpha: float
    omega: float
    theta: float
    metric: DistanceMetric

    @staticmethod
    def create(k: int, alpha: float = 0.5, omega: float = 0.5, theta: float = 0.0,
               metric: Union[str, DistanceMetric] = DistanceMetric.HAVERSINE_KM):
        """
        Validates and builds the query parameters. Omega has to be strictly inside (0, 1) because the pruning bounds divide by both omega and
        1 - omega; the CLI clamps boundary requests before they get here.
        """
        if int(k) < 1:
            raise DomainError(f"k must be a positive integer, got {k}")
        if not 0.0 <= float(alpha) <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
        if not 0.0 < float(omega) < 1.0:
            raise DomainError(f"omega must lie strictly inside (0, 1), got {omega}")
        if float(theta) < 0.0 or math.isnan(float(theta)):
            raise DomainError(f"theta must be non-negative, got {theta}")

        return Params(int(k), float(alpha), float(omega), float(theta), DistanceMetric.create(metric))


class SetScore(NamedTuple):
    members: tuple
    relevance_sum: float
    diversity_sum: float
    # Aligned with members. A singleton holds 0.0 here.
    per_member_min_div: tuple
    total: float

    @staticmethod
    def create(members: tuple, relevances: tuple, min_divs: tuple, omega: float):
        relevance_sum = math.fsum(relevances)
        diversity_sum = math.fsum(min_divs) if len(members) > 1 else 0.0
        total = omega * relevance_sum + (1.0 - omega) * diversity_sum

        return SetScore(tuple(members), relevance_sum, diversity_sum, tuple(min_divs) if len(members) > 1 else (0.0,) * len(members), total)


class SearchState(NamedTuple):
    partial: tuple
    remaining: tuple
    score: float
    min_divs: tuple

    @staticmethod
    def create(partial: tuple, remaining: tuple, score: float, min_divs: tuple):
        return SearchState(tuple(partial), tuple(remaining), score, tuple(min_divs))


class SelectionResult(NamedTuple):
    algorithm: str
    members: tuple
    labels: tuple
    score: SetScore
    telemetry: dict

    @staticmethod
    def create(algorithm: str, score: SetScore, labels: dict, telemetry: dict):
        """
        Builds a result from a set score. Members are reported in ascending location id order, whatever order the solver picked them in.
        """
        members = tuple(sorted(score.members))
        return SelectionResult(algorithm, members, tuple(labels[member] for member in members), score, dict(telemetry))

    @property
    def total(self) -> float:
        return self.score.total


class GneConfig(NamedTuple):
    pool_fraction: float = 0.25
    max_swap_rounds: int = 50
    rng_seed: int = 42
    restarts: int = 1

    @staticmethod
    def create(section: Optional[dict] = None, seed: Optional[int] = None):
        section = section or {}
        defaults = GneConfig()

        config = GneConfig(float(section.get("pool_fraction", defaults.pool_fraction)),
                           int(section.get("max_swap_rounds", defaults.max_swap_rounds)),
                           int(seed if seed is not None else section.get("rng_seed", defaults.rng_seed)),
                           int(section.get("restarts", defaults.restarts)))

        if not 0.0 < config.pool_fraction <= 1.0:
            raise DataError(f"gne.pool_fraction must lie in (0, 1], got {config.pool_fraction}")
        if config.max_swap_rounds < 0:
            raise DataError(f"gne.max_swap_rounds must be non-negative, got {config.max_swap_rounds}")
        if config.restarts < 1:
            raise DataError(f"gne.restarts must be at least 1, got {config.restarts}")

        return config


class SosConfig(NamedTuple):
    similarity_threshold: float = 0.4

    @staticmethod
    def create(section: Optional[dict] = None):
        section = section or {}
        threshold = float(section.get("similarity_threshold", SosConfig().similarity_threshold))

        if not 0.0 <= threshold <= 1.0:
            raise DataError(f"sos.similarity_threshold must lie in [0, 1], got {threshold}")

        return SosConfig(threshold)
