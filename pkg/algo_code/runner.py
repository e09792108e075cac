from typing import NamedTuple

from algo_code.approx import solve_approx
from algo_code.baselines import DEFAULT_BRUTE_CAP, adaptive_sos, brute_force, gmc, gne
from algo_code.datatypes import GneConfig, Params, SelectionResult, SosConfig
from algo_code.exact import solve_exact
from algo_code.exact_plus import solve_exact_plus, solve_fast_approx
from algo_code.scoring import ScoreTable
from utils.errors import DomainError

ALGORITHMS = ("exact", "approx", "exactplus", "fast", "gmc", "gne", "sos", "brute")


class SolverOptions(NamedTuple):
    max_states: int = 0
    brute_cap: int = DEFAULT_BRUTE_CAP
    gne: GneConfig = GneConfig()
    sos: SosConfig = SosConfig()
    strict_singleton_bound: bool = False
    use_pruning: bool = True

    @staticmethod
    def create(max_states: int = 0, brute_cap: int = DEFAULT_BRUTE_CAP, gne_config: GneConfig = GneConfig(),
               sos_config: SosConfig = SosConfig(), strict_singleton_bound: bool = False, use_pruning: bool = True):
        return SolverOptions(int(max_states), int(brute_cap), gne_config, sos_config, bool(strict_singleton_bound), bool(use_pruning))


def run_algorithm(algorithm: str, table: ScoreTable, params: Params, options: SolverOptions = SolverOptions()) -> SelectionResult:
    """
    Dispatches a query to one of the solvers or baselines by name.
    """
    if algorithm == "exact":
        return solve_exact(table, params, use_pruning=options.use_pruning, max_states=options.max_states)
    elif algorithm == "approx":
        return solve_approx(table, params, max_states=options.max_states)
    elif algorithm == "exactplus":
        return solve_exact_plus(table, params, options.strict_singleton_bound)
    elif algorithm == "fast":
        return solve_fast_approx(table, params, options.strict_singleton_bound)
    elif algorithm == "gmc":
        return gmc(table, params)
    elif algorithm == "gne":
        return gne(table, params, options.gne)
    elif algorithm == "sos":
        return adaptive_sos(table, params, options.sos)
    elif algorithm == "brute":
        return brute_force(table, params, options.brute_cap)

    raise DomainError(f"Unknown algorithm {algorithm!r}, expected one of: {', '.join(ALGORITHMS)}")
