from typing import Any

import pandas as pd
import ujson

from algo_code.context import QueryContext
from algo_code.datatypes import DistanceMetric, Params, SelectionResult
from algo_code.metrics import MmdMode, entropy_is_degenerate, mmd, social_coverage, social_entropy
from algo_code.scoring import ScoreTable, social_diversity, spatial_diversity
from utils.errors import DataError

FLOAT_DECIMALS = 6

# Telemetry fields that hold wall-clock measurements; zeroed unless timing output is requested
TIMING_FIELDS = ("wall_ms",)


def round_floats(value: Any, decimals: int = FLOAT_DECIMALS) -> Any:
    if isinstance(value, float):
        return round(value, decimals)
    if isinstance(value, dict):
        return {key: round_floats(item, decimals) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(item, decimals) for item in value]
    return value


def dump_json(document: dict) -> str:
    return ujson.dumps(round_floats(document), sort_keys=True, indent=2, escape_forward_slashes=False)


def public_telemetry(telemetry: dict, timing: bool) -> dict:
    telemetry = dict(telemetry)
    if not timing:
        for field in TIMING_FIELDS:
            if field in telemetry:
                telemetry[field] = 0.0
    return telemetry


def evaluate(ctx: QueryContext, result: SelectionResult, params: Params) -> dict:
    """
    Quality metrics of one answer set: spatial and socio-spatial MMD, social coverage at theta and social entropy.
    """
    return {
        "mmd_spatial": mmd(ctx, result.members, MmdMode.SPATIAL),
        "mmd_ss": mmd(ctx, result.members, MmdMode.SOCIO_SPATIAL, params.alpha),
        "sc_theta": social_coverage(ctx, result.members, params.theta),
        "se": social_entropy(ctx, result.members),
        "se_degenerate": entropy_is_degenerate(ctx, result.members),
    }


def result_document(ctx: QueryContext, table: ScoreTable, result: SelectionResult, params: Params, timing: bool = False) -> dict:
    members_by_choice = dict(zip(result.score.members, result.score.per_member_min_div))

    selected = []
    for location, label in zip(result.members, result.labels):
        coordinates = ctx.coordinates.get(location) if ctx.coordinates else None
        selected.append({
            "locid": location,
            "label": label,
            "coordinates": list(coordinates) if coordinates is not None else None,
            "relevance": table.relevance[location],
            "min_diversity": members_by_choice[location],
        })

    return {
        "query_user": ctx.query_user,
        "algorithm": result.algorithm,
        "params": {"k": params.k, "alpha": params.alpha, "omega": params.omega, "theta": params.theta, "metric": params.metric.value},
        "selected": selected,
        "score": {"F": result.score.total, "relevance_sum": result.score.relevance_sum, "diversity_sum": result.score.diversity_sum},
        "metrics": evaluate(ctx, result, params),
        "telemetry": public_telemetry(result.telemetry, timing),
    }


def _geojson_point(ctx: QueryContext, location) -> list:
    first, second = ctx.coordinates[location]
    # GeoJSON positions are (x, y), i.e. (lon, lat) for geographic data
    return [second, first] if ctx.metric == DistanceMetric.HAVERSINE_KM else [first, second]


def geojson_document(ctx: QueryContext, table: ScoreTable, result: SelectionResult) -> dict:
    """
    FeatureCollection with the selected locations and every check-in of the scoring friends.
    """
    if ctx.coordinates is None:
        raise DataError("GeoJSON export needs location coordinates, this context only has injected distances")

    features = []
    for location, label in zip(result.members, result.labels):
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": _geojson_point(ctx, location)},
            "properties": {"role": "selected", "locid": location, "label": label, "relevance": table.relevance[location]},
        })

    for friend in ctx.friends:
        for location in ctx.friend_locations[friend]:
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": _geojson_point(ctx, location)},
                "properties": {"role": "friend_checkin", "friend": friend, "locid": location},
            })

    return {"type": "FeatureCollection", "features": features}


def score_frame(table: ScoreTable) -> pd.DataFrame:
    ctx = table.ctx
    return pd.DataFrame({
        "locid": list(ctx.candidates),
        "label": [ctx.labels[location] for location in ctx.candidates],
        "S_sc": [table.social[location] for location in ctx.candidates],
        "S_sp": [table.spatial[location] for location in ctx.candidates],
        "R_ss": [table.relevance[location] for location in ctx.candidates],
    })


def pair_frame(table: ScoreTable) -> pd.DataFrame:
    ctx = table.ctx
    rows = []
    for index, first in enumerate(ctx.candidates):
        for second in ctx.candidates[index + 1:]:
            rows.append((first, second, social_diversity(ctx, first, second), spatial_diversity(ctx, first, second),
                         table.pair_diversity(first, second)))

    return pd.DataFrame(rows, columns=["locid_a", "locid_b", "D_sc", "D_sp", "D_ss"])


def to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=f"%.{FLOAT_DECIMALS}f", lineterminator="\n")
