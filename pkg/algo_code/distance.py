import math

import numpy as np

from algo_code.datatypes import DistanceMetric
from utils.errors import DomainError

# Earth's mean radius in kilometers
EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """
    Great-circle distance between two points using the Haversine formula.

    Args:
        lat1, lon1: First point coordinates in degrees
        lat2, lon2: Second point coordinates in degrees

    Returns:
        Distance in kilometers
    """
    lat1_rad = math.radians(lat1)
    lat2_rad = math.radians(lat2)
    dlat = math.radians(lat2 - lat1)
    dlon = math.radians(lon2 - lon1)

    a = math.sin(dlat / 2) ** 2 + math.cos(lat1_rad) * math.cos(lat2_rad) * math.sin(dlon / 2) ** 2
    c = 2 * math.asin(min(1.0, math.sqrt(a)))

    return EARTH_RADIUS_KM * c


def planar_distance(x1: float, y1: float, x2: float, y2: float) -> float:
    return math.hypot(x2 - x1, y2 - y1)


def point_distance(first: tuple, second: tuple, metric: DistanceMetric) -> float:
    if metric == DistanceMetric.HAVERSINE_KM:
        return haversine_km(first[0], first[1], second[0], second[1])
    elif metric == DistanceMetric.PLANAR:
        return planar_distance(first[0], first[1], second[0], second[1])

    raise DomainError(f"Metric {metric.value} has no coordinate formula, distances must be injected")


def distance_matrix(rows: np.ndarray, columns: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    """
    Vectorized distances between every row point and every column point.

    Args:
        rows: Array of shape (n, 2) with (lat, lon) or (x, y) pairs
        columns: Array of shape (m, 2)
        metric: The active coordinate metric

    Returns:
        np.ndarray: Array of shape (n, m)
    """
    rows = np.asarray(rows, dtype=float).reshape(-1, 2)
    columns = np.asarray(columns, dtype=float).reshape(-1, 2)

    if metric == DistanceMetric.PLANAR:
        dx = rows[:, 0][:, None] - columns[:, 0][None, :]
        dy = rows[:, 1][:, None] - columns[:, 1][None, :]
        return np.hypot(dx, dy)

    if metric == DistanceMetric.HAVERSINE_KM:
        lat1 = np.radians(rows[:, 0])[:, None]
        lat2 = np.radians(columns[:, 0])[None, :]
        dlat = lat2 - lat1
        dlon = np.radians(columns[:, 1])[None, :] - np.radians(rows[:, 1])[:, None]

        a = np.sin(dlat / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2) ** 2
        return EARTH_RADIUS_KM * 2 * np.arcsin(np.minimum(1.0, np.sqrt(a)))

    raise DomainError(f"Metric {metric.value} has no coordinate formula, distances must be injected")


def max_pairwise_distance(points: np.ndarray, metric: DistanceMetric, chunk_size: int = 1024) -> float:
    """
    Maximum distance over all point pairs, computed in row chunks so large candidate sets never need the full matrix in memory.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        return 0.0

    maximum = 0.0
    for start in range(0, len(points), chunk_size):
        block = distance_matrix(points[start:start + chunk_size], points, metric)
        maximum = max(maximum, float(block.max()))

    return maximum
