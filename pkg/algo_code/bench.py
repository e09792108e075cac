import concurrent.futures
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from algo_code.context import DEFAULT_MATRIX_LIMIT, build_query_context
from algo_code.datatypes import DistanceMetric, Params
from algo_code.graph import CHECKIN_GROUPS, MIN_GROUP_LOCATIONS, SocioSpatialGraph, checkin_group
from algo_code.metrics import precision
from algo_code.report import evaluate
from algo_code.runner import SolverOptions, run_algorithm
from algo_code.scoring import ScoreTable
from utils.errors import DomainError, QueryIneligibleError, SSLSError
from utils.logger import logger, make_set_width

ROW_COLUMNS = ["user", "algo", "k", "alpha", "omega", "F", "precision", "mmd_spatial", "mmd_ss", "sc_theta", "se", "wall_ms",
               "ratio_vs_exact", "exhausted"]

METRIC_COLUMNS = ["F", "precision", "mmd_spatial", "mmd_ss", "sc_theta", "se", "wall_ms", "ratio_vs_exact"]


def sample_group_users(graph: SocioSpatialGraph, group: int, sample_size: int, seed: int, min_friends: int = 2) -> list[int]:
    """
    Draws a seeded sample of the eligible users of one check-in group. The draw is taken from the sorted eligible list, so a seed always
    picks the same users.
    """
    if group not in CHECKIN_GROUPS:
        raise DomainError(f"group must be one of {CHECKIN_GROUPS}, got {group}")

    eligible = [user for user in graph.eligible_users(MIN_GROUP_LOCATIONS, min_friends) if checkin_group(graph, user) == group]
    if not eligible:
        raise QueryIneligibleError(f"check-in group {group} has no eligible users")

    if sample_size <= 0:
        return []

    rng = np.random.default_rng(seed)
    picks = rng.choice(len(eligible), size=min(sample_size, len(eligible)), replace=False)

    return sorted(eligible[index] for index in picks)


class BenchRunner:
    """
    Runs every algorithm over a parameter grid for a list of query users and collects one row per (user, algo, k, alpha, omega). Users are
    fanned out over a thread pool; rows are sorted before they are returned so the report does not depend on completion order.
    """

    def __init__(self, graph: SocioSpatialGraph,
                 algorithms: Sequence[str],
                 k_values: Sequence[int],
                 alpha_values: Sequence[float],
                 omega_values: Sequence[float],
                 metric: DistanceMetric,
                 theta: float,
                 options: SolverOptions,
                 workers: int = 4,
                 timing: bool = False,
                 min_friends: int = 1,
                 matrix_limit: int = DEFAULT_MATRIX_LIMIT):

        self.graph = graph
        self.algorithms = list(algorithms)
        self.k_values = sorted(set(k_values))
        self.alpha_values = sorted(set(alpha_values))
        self.omega_values = sorted(set(omega_values))
        self.metric = metric
        self.theta = theta
        self.options = options
        self.workers = max(1, workers)
        self.timing = timing
        self.min_friends = min_friends
        self.matrix_limit = matrix_limit

    def run_user(self, user: int) -> list[dict]:
        ctx = build_query_context(self.graph, user, self.metric, self.min_friends, self.matrix_limit)
        rows = []

        for alpha in self.alpha_values:
            table = ScoreTable(ctx, alpha, self.matrix_limit)

            for omega in self.omega_values:
                for k in self.k_values:
                    if k > ctx.size:
                        logger.debug(f"\t{make_set_width(user)}\tSkipping k={k}, only {ctx.size} candidates")
                        continue

                    params = Params.create(k, alpha, omega, self.theta, self.metric)
                    reference = run_algorithm("exact", table, params, self.options)

                    for algorithm in self.algorithms:
                        try:
                            result = reference if algorithm == "exact" else run_algorithm(algorithm, table, params, self.options)
                        except DomainError as error:
                            logger.warning(f"\t{make_set_width(algorithm)}\t{make_set_width(user)}\tSkipped: {error}")
                            continue

                        metrics = evaluate(ctx, result, params)
                        rows.append({
                            "user": user,
                            "algo": algorithm,
                            "k": k,
                            "alpha": alpha,
                            "omega": omega,
                            "F": result.total,
                            "precision": precision(result.members, reference.members),
                            "mmd_spatial": metrics["mmd_spatial"],
                            "mmd_ss": metrics["mmd_ss"],
                            "sc_theta": metrics["sc_theta"],
                            "se": metrics["se"],
                            "wall_ms": result.telemetry.get("wall_ms", 0.0) if self.timing else 0.0,
                            "ratio_vs_exact": reference.total / result.total if result.total > 0.0 else float("nan"),
                            "exhausted": bool(result.telemetry.get("exhausted", False) or reference.telemetry.get("exhausted", False)),
                        })

        return rows

    def run(self, users: Sequence[int]) -> pd.DataFrame:
        rows: list[dict] = []

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.workers) as executor:
            futures = {executor.submit(self.run_user, user): user for user in users}
            for future in concurrent.futures.as_completed(futures):
                user = futures[future]
                try:
                    user_rows = future.result()
                except SSLSError as error:
                    logger.warning(f"\t{make_set_width(user)}\tUser skipped: {error}")
                    continue

                rows.extend(user_rows)
                logger.info(f"\t{make_set_width(user)}\tDone, {len(user_rows)} rows")

        frame = pd.DataFrame(rows, columns=ROW_COLUMNS)
        return frame.sort_values(["user", "algo", "k", "alpha", "omega"], kind="mergesort").reset_index(drop=True)


def summarize(rows: pd.DataFrame) -> pd.DataFrame:
    """
    Mean of every metric per (algo, k, alpha, omega) cell, plus the number of users in the cell.
    """
    keys = ["algo", "k", "alpha", "omega"]
    if rows.empty:
        return pd.DataFrame(columns=keys + ["users"] + METRIC_COLUMNS)

    grouped = rows.groupby(keys, sort=True)
    summary = grouped[METRIC_COLUMNS].mean()
    summary.insert(0, "users", grouped.size())

    return summary.reset_index()


def run_synthetic_users(n_locations: int, runner_factory, seed: int, contexts: int = 1) -> Optional[pd.DataFrame]:
    """
    Benchmarks synthetic planar instances: one generated graph per context, each with a single query user.
    """
    from algo_code.synthetic import QUERY_USER, make_synthetic_graph

    frames = []
    for offset in range(contexts):
        graph = make_synthetic_graph(n_locations, seed=seed + offset)
        frame = runner_factory(graph).run([QUERY_USER])
        frame.insert(0, "instance", offset)
        frames.append(frame)

    return pd.concat(frames, ignore_index=True) if frames else None
