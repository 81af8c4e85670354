"""Deterministic simulator for decentralized stochastic minimax optimization.

Five consensus strategies (exact diffusion, EXTRA, and three
gradient-tracking variants) drive coupled descent/ascent iterates over a
network of agents, with a switching variance-reduced gradient estimator
covering STORM, PAGE, and Loopless SARAH as special cases.
"""

from .engine import EngineConfig, EngineState, MetricsSeries, RoundMetrics, \
    init_engine, run_and_measure, step
from .errors import AscentCapError, ConfigError, DegenerateModeError, \
    DivergenceError, EigConvergenceError, NotPSDError
from .estimator import EstimatorMode, GraceParams, GraceState, \
    estimator_error, init_estimator, preset_params, update_estimator
from .harness import RunConfig, config_from_dict, load_config, \
    run_experiment, sweep, verify_invariants, write_outputs
from .mixing import MixingMatrix, Topology, build_graph, eigh_symmetric, \
    metropolis_weights, mixing_for_topology, sqrt_psd
from .problems import ProblemConstants, QuadraticMinimaxProblem, \
    SinPLProblem, make_quadratic_problem, make_sinpl_problem, \
    maximizer_oracle
from .schedules import ScheduleMode, ScheduleSpec, TheoremConstants, \
    schedule_for_mode, shrink_to_valid, theorem_constants, \
    validate_conditions
from .strategies import SQRT_STRATEGIES, StrategyKind, StrategyOps, \
    build_strategy, verify_strategy_assumptions
from .transform import CoupledError, TransformBundle, \
    build_transform_bundle, check_consensus_bound, coupled_error_norms

__version__ = "0.1.0"
