import os
import sys
from typing import Optional

import pandas as pd

from algo_code.bench import ROW_COLUMNS, BenchRunner, run_synthetic_users, sample_group_users, summarize
from algo_code.context import QueryContext, build_query_context, load_toy_fixture
from algo_code.datatypes import DistanceMetric, Params
from algo_code.graph import SocioSpatialGraph, load_graph
from algo_code.report import dump_json, geojson_document, pair_frame, result_document, score_frame, to_csv
from algo_code.runner import SolverOptions, run_algorithm
from algo_code.scoring import ScoreTable
from utils.constants import build_parser, clamp_omega, default_snapshot_path, load_baseline_config, load_params
from utils.errors import DomainError, SSLSError
from utils.initialize import initialize
from utils.logger import logger, make_set_width


def write_output(text: str, path: Optional[str] = None):
    if path is None:
        sys.stdout.write(text)
        return

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as output_file:
        output_file.write(text)


def load_snapshot_graph(args, params: dict) -> SocioSpatialGraph:
    path = args.snapshot or default_snapshot_path(params)
    logger.debug(f"\t{make_set_width('snapshot')}\tLoading {path}")
    return SocioSpatialGraph.load_snapshot(path)


def query_context(args, params: dict) -> QueryContext:
    if args.fixture:
        return load_toy_fixture(args.fixture)

    graph = load_snapshot_graph(args, params)
    return build_query_context(graph, args.user, args.metric, int(params["min_friends"]), int(params["pair_matrix_limit"]))


def solver_options(args) -> SolverOptions:
    gne_config, sos_config = load_baseline_config(args.config, args.seed)
    return SolverOptions.create(args.max_states, args.brute_cap, gne_config, sos_config, args.strict_singleton_bound)


# Commands _______________________________________________________________________________________
def cmd_ingest(args, params: dict):
    graph = load_graph(args.edges, args.checkins)
    out_path = args.out or default_snapshot_path(params)

    directory = os.path.dirname(out_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    graph.save_snapshot(out_path)

    stats = graph.statistics()
    write_output("".join(f"{name}\t{stats[name]}\n" for name in ("Users", "Edges", "Checkins", "Places")))
    if graph.self_loop_warnings:
        logger.warning(f"\t{make_set_width('ingest')}\tSkipped {graph.self_loop_warnings} self-loop edges")
    logger.info(f"\t{make_set_width('ingest')}\tSnapshot written to {out_path}")


def cmd_query(args, params: dict):
    ctx = query_context(args, params)
    metric = ctx.metric if args.fixture else DistanceMetric.create(args.metric)

    query_params = Params.create(args.k, args.alpha, clamp_omega(args.omega), args.theta, metric)
    table = ScoreTable(ctx, query_params.alpha, int(params["pair_matrix_limit"]))

    result = run_algorithm(args.algo, table, query_params, solver_options(args))
    write_output(dump_json(result_document(ctx, table, result, query_params, args.timing)) + "\n", args.out)

    if args.geojson:
        write_output(dump_json(geojson_document(ctx, table, result)) + "\n", args.geojson)
        logger.info(f"\t{make_set_width('query')}\tGeoJSON written to {args.geojson}")


def cmd_bench(args, params: dict):
    omega_values = [clamp_omega(omega) for omega in args.omega]
    options = solver_options(args)

    def runner_factory(graph: SocioSpatialGraph, metric) -> BenchRunner:
        return BenchRunner(graph, args.algo, args.k, args.alpha, omega_values, metric, args.theta, options, args.workers, args.timing,
                           int(params["min_friends"]), int(params["pair_matrix_limit"]))

    if args.synthetic is not None:
        frame = run_synthetic_users(args.synthetic, lambda graph: runner_factory(graph, DistanceMetric.PLANAR), args.seed, args.sample)
        if frame is None:
            frame = pd.DataFrame(columns=["instance"] + ROW_COLUMNS)
    else:
        graph = load_snapshot_graph(args, params)
        users = sample_group_users(graph, args.group, args.sample, args.seed, int(params["min_friends"]))
        logger.info(f"\t{make_set_width('bench')}\tGroup {args.group}: {len(users)} users sampled")
        frame = runner_factory(graph, DistanceMetric.create(args.metric)).run(users)

    write_output(to_csv(frame), args.out)
    if args.summary:
        write_output(to_csv(summarize(frame)), args.summary)


def cmd_stats(args, params: dict):
    stats = load_snapshot_graph(args, params).statistics()

    lines = []
    for name, value in stats.items():
        lines.append(f"{name}\t{value:.6f}\n" if isinstance(value, float) else f"{name}\t{value}\n")
    write_output("".join(lines))


def cmd_scores(args, params: dict):
    ctx = query_context(args, params)
    table = ScoreTable(ctx, args.alpha, int(params["pair_matrix_limit"]))

    write_output(to_csv(pair_frame(table) if args.pairs else score_frame(table)))


COMMANDS = {
    "ingest": cmd_ingest,
    "query": cmd_query,
    "bench": cmd_bench,
    "stats": cmd_stats,
    "scores": cmd_scores,
}


def main(argv: Optional[list[str]] = None) -> int:
    params = load_params()
    parser = build_parser(params)
    args = parser.parse_args(argv)

    if args.command in ("query", "scores") and not args.fixture and args.user is None:
        parser.error(f"{args.command} needs --user unless --fixture is given")

    initialize(args)

    try:
        COMMANDS[args.command](args, params)
    except SSLSError as error:
        logger.error(f"\t{make_set_width(args.command)}\t{type(error).__name__}: {error}")
        return error.exit_code
    except DomainError as error:
        logger.error(f"\t{make_set_width(args.command)}\t{type(error).__name__}: {error}")
        return DomainError.exit_code

    return 0


if __name__ == "__main__":
    sys.exit(main())
