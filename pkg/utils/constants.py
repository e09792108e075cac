import argparse
import os
from typing import Callable, Optional

import yaml
from dotenv import dotenv_values

from algo_code.datatypes import DistanceMetric, GneConfig, SosConfig
from algo_code.runner import ALGORITHMS
from utils.errors import DataError
from utils.logger import logger, make_set_width

PARAMS_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), ".env.params")

# Built-in defaults, used when neither an argument nor .env.params provides a value
DEFAULTS = {
    "k": "6",
    "alpha": "0.5",
    "omega": "0.5",
    "theta": "1.0",
    "metric": "haversine-km",
    "algo": "exact",
    "seed": "42",
    "workers": "4",
    "sample": "10",
    "brute_cap": "2000000",
    "max_states": "0",
    "bench_max_states": "200000",
    "min_friends": "2",
    "pair_matrix_limit": "2048",
    "data_dir": "data",
    "log_level": "INFO",
    "config_path": "config.yaml",
}

GROUP_IDS = (50, 100, 200, 500, 1000)

# Metrics a user may pick; injected distances only come from fixtures
COORDINATE_METRICS = (DistanceMetric.PLANAR.value, DistanceMetric.HAVERSINE_KM.value)

# omega has to stay strictly inside (0, 1); CLI requests on the boundary are moved this far inside
OMEGA_EPSILON = 1e-6


def load_params(path: str = PARAMS_PATH) -> dict[str, str]:
    """
    Reads the scalar defaults from .env.params, falling back to the built-in defaults for missing keys. A missing file is not an error.
    """
    params = dict(DEFAULTS)
    if os.path.exists(path):
        params.update({key: value for key, value in dotenv_values(path).items() if value is not None and value != ""})

    return params


def data_dir(params: dict[str, str]) -> str:
    return os.environ.get("SSLS_DATA_DIR") or params["data_dir"]


def default_snapshot_path(params: dict[str, str]) -> str:
    return os.path.join(data_dir(params), "snapshot.json")


def clamp_omega(omega: float) -> float:
    if omega <= 0.0:
        logger.warning(f"\t{make_set_width('omega')}\tomega={omega} is outside (0, 1), clamped to {OMEGA_EPSILON}")
        return OMEGA_EPSILON
    if omega >= 1.0:
        logger.warning(f"\t{make_set_width('omega')}\tomega={omega} is outside (0, 1), clamped to {1.0 - OMEGA_EPSILON}")
        return 1.0 - OMEGA_EPSILON
    return omega


def parse_list(text, cast: Callable = float) -> list:
    """
    Parses a comma separated flag value such as "2,4,6" into a list of values. Used as an argparse type, so a bad item becomes a usage error.
    """
    if isinstance(text, (list, tuple)):
        return [cast(item) for item in text]

    try:
        values = [cast(item.strip()) for item in str(text).split(",") if item.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"could not parse {text!r} as a list: {error}")

    if not values:
        raise argparse.ArgumentTypeError(f"empty list value {text!r}")

    return values


def list_of(cast: Callable) -> Callable:
    def parse(text):
        return parse_list(text, cast)

    parse.__name__ = f"list of {getattr(cast, '__name__', 'values')}"
    return parse


def positive_int(text) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def unit_interval(text) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return value


def algorithm_name(text) -> str:
    name = str(text).strip().lower()
    if name not in ALGORITHMS:
        raise argparse.ArgumentTypeError(f"unknown algorithm {text!r}, expected one of: {', '.join(ALGORITHMS)}")
    return name


def metric_name(text) -> str:
    name = str(text).strip().lower()
    if name not in COORDINATE_METRICS:
        raise argparse.ArgumentTypeError(f"unknown metric {text!r}, expected one of: {', '.join(COORDINATE_METRICS)}")
    return name


def load_baseline_config(path: Optional[str], seed: Optional[int] = None) -> tuple[GneConfig, SosConfig]:
    """
    Reads the baselines section of the YAML config. A missing file gives the defaults; a present but malformed one is a data error.

    Args:
        path: Path of config.yaml
        seed: Overrides gne.rng_seed when given

    Returns:
        tuple[GneConfig, SosConfig]: The validated baseline configurations
    """
    if not path or not os.path.exists(path):
        return GneConfig.create(None, seed), SosConfig.create(None)

    try:
        with open(path, "r", encoding="utf-8") as config_file:
            document = yaml.safe_load(config_file) or {}
    except yaml.YAMLError as error:
        raise DataError(f"invalid YAML: {error}", path)

    if not isinstance(document, dict):
        raise DataError("top level of the config must be a mapping", path)

    baselines = document.get("baselines") or {}
    if not isinstance(baselines, dict):
        raise DataError("baselines must be a mapping", path)

    return GneConfig.create(baselines.get("gne"), seed), SosConfig.create(baselines.get("sos"))


def _add_query_arguments(parser: argparse.ArgumentParser, params: dict[str, str], sweep: bool = False):
    if sweep:
        parser.add_argument("--k", type=list_of(positive_int), default=params["k"], help="Comma separated list of k values")
        parser.add_argument("--alpha", type=list_of(unit_interval), default=params["alpha"], help="Comma separated list of alpha values")
        parser.add_argument("--omega", type=list_of(float), default=params["omega"], help="Comma separated list of omega values")
        parser.add_argument("--algo", type=list_of(algorithm_name), default=params["algo"], help="Comma separated list of algorithms")
    else:
        parser.add_argument("--k", type=positive_int, default=params["k"], help="Number of locations to select")
        parser.add_argument("--alpha", type=unit_interval, default=params["alpha"], help="Social weight in [0, 1]")
        parser.add_argument("--omega", type=float, default=params["omega"], help="Relevance weight in (0, 1)")
        parser.add_argument("--algo", type=algorithm_name, default=params["algo"], help="Algorithm to run")

    parser.add_argument("--metric", type=metric_name, default=params["metric"], help="planar, haversine-km")
    parser.add_argument("--theta", type=float, default=float(params["theta"]), help="Social coverage radius, in the metric's unit")
    parser.add_argument("--seed", type=int, default=int(params["seed"]), help="Seed of the randomized baselines and of the user sample")
    parser.add_argument("--max-states", type=int, default=int(params["max_states"]), help="State budget of exact/approx, 0 is unlimited")
    parser.add_argument("--brute-cap", type=int, default=int(params["brute_cap"]), help="Largest number of subsets brute force may enumerate")
    parser.add_argument("--config", default=params["config_path"], help="YAML file with the baselines section")
    parser.add_argument("--strict-singleton-bound", action="store_true", help="Use the doubled singleton bracket in the exactplus pruning bound")
    parser.add_argument("--timing", action="store_true", help="Report measured wall times instead of zeros")
    parser.add_argument("--snapshot", default=None, help="Graph snapshot, defaults to <data_dir>/snapshot.json")


def build_parser(params: Optional[dict[str, str]] = None) -> argparse.ArgumentParser:
    """
    Command-line parser. Every default comes from .env.params, so an argument given on the command line always wins over the params file.
    """
    params = params if params is not None else load_params()

    parser = argparse.ArgumentParser(prog="ssls", description="Socio-spatial co-engaged location selection")
    parser.add_argument("--verbose", action="store_true", help="Log DEBUG messages to the console")
    parser.add_argument("--log-level", default=params["log_level"], help="Console logging level")
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest = subparsers.add_parser("ingest", help="Load edge and check-in files and write a snapshot")
    ingest.add_argument("edges", help="Tab separated friendship file")
    ingest.add_argument("checkins", help="Tab separated check-in file")
    ingest.add_argument("--out", default=None, help="Snapshot path, defaults to <data_dir>/snapshot.json")

    query = subparsers.add_parser("query", help="Answer one query")
    _add_query_arguments(query, params)
    query.add_argument("--user", type=int, default=None, help="Query user (required unless --fixture is given)")
    query.add_argument("--fixture", default=None, help="YAML fixture with injected distances instead of a snapshot")
    query.add_argument("--geojson", default=None, help="Write a GeoJSON FeatureCollection to this path")
    query.add_argument("--out", default=None, help="Write the result document here instead of stdout")

    bench = subparsers.add_parser("bench", help="Run a parameter sweep over a sample of users")
    _add_query_arguments(bench, params, sweep=True)
    bench.add_argument("--group", type=int, choices=GROUP_IDS, default=50, help="Check-in group to sample users from")
    bench.add_argument("--sample", type=int, default=int(params["sample"]), help="Number of users to sample")
    bench.add_argument("--workers", type=int, default=int(params["workers"]), help="Worker threads")
    bench.add_argument("--synthetic", type=int, default=None, help="Benchmark synthetic planar instances with this many candidates")
    bench.add_argument("--out", default=None, help="Row CSV path, defaults to stdout")
    bench.add_argument("--summary", default=None, help="Write per-cell means to this CSV")
    bench.set_defaults(max_states=int(params["bench_max_states"]))

    stats = subparsers.add_parser("stats", help="Print dataset statistics of a snapshot")
    stats.add_argument("--snapshot", default=None, help="Graph snapshot, defaults to <data_dir>/snapshot.json")

    scores = subparsers.add_parser("scores", help="Dump per-location relevance scores as CSV")
    scores.add_argument("--fixture", default=None, help="YAML fixture with injected distances")
    scores.add_argument("--snapshot", default=None, help="Graph snapshot, defaults to <data_dir>/snapshot.json")
    scores.add_argument("--user", type=int, default=None, help="Query user when reading a snapshot")
    scores.add_argument("--alpha", type=unit_interval, default=params["alpha"], help="Social weight in [0, 1]")
    scores.add_argument("--metric", type=metric_name, default=params["metric"], help="planar, haversine-km")
    scores.add_argument("--pairs", action="store_true", help="Dump the pairwise diversity table instead")

    return parser
