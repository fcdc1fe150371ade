"""Discounted dynamic-programming solver toolkit.

Solves finite (and grid-discretized continuous) discounted decision
processes by value iteration on a contraction fixed-point engine,
extracts greedy stationary policies with certified optimality gaps,
evaluates policies exactly, estimates values by seeded Monte Carlo
rollout, and verifies structural invariant classes (monotone, concave,
Lipschitz) on a zoo of canonical models.
"""

from .bellman import (
    GreedyResult,
    bellman_backup,
    check_monotone,
    contraction_ratio,
    discounting_defect,
    greedy_policy,
    policy_backup,
    q_table,
    q_value,
)
from .estimator import ValueIterationSolver
from .fixed_point import (
    ContractionMap,
    IterationTrace,
    NonConvergenceError,
    a_priori_iterations,
    iterate_to_fixed_point,
)
from .mdp import (
    FiniteHorizonStrategy,
    FiniteMdp,
    ModelFormatError,
    ValidationError,
    load_model,
    save_model,
    stationary_strategy,
    sup_norm_distance,
    tabular_strategy,
    validate,
    value_upper_bound,
)
from .rollout import (
    RolloutConfig,
    RolloutEstimate,
    horizon_for_bias,
    simulate_policy,
    simulate_strategy,
    truncation_bias,
)
from .solver import (
    SolveResult,
    backward_induction,
    certify_epsilon_optimal,
    evaluate_policy_exact,
    extract_epsilon_policy,
    oracle_horizon,
    solve,
)
from .structure import (
    CheckReport,
    ContinuousModelSpec,
    GridModel,
    StructuralClass,
    check_greedy_monotone,
    check_preserves_concave,
    check_preserves_lipschitz,
    check_preserves_monotone,
    discretize,
    project_atoms,
    run_class_checks,
)
from . import zoo

__version__ = "0.1.0"

__all__ = [
    "ContinuousModelSpec",
    "CheckReport",
    "ContractionMap",
    "FiniteHorizonStrategy",
    "FiniteMdp",
    "GreedyResult",
    "GridModel",
    "IterationTrace",
    "ModelFormatError",
    "NonConvergenceError",
    "RolloutConfig",
    "RolloutEstimate",
    "SolveResult",
    "StructuralClass",
    "ValidationError",
    "ValueIterationSolver",
    "a_priori_iterations",
    "backward_induction",
    "bellman_backup",
    "certify_epsilon_optimal",
    "check_greedy_monotone",
    "check_monotone",
    "check_preserves_concave",
    "check_preserves_lipschitz",
    "check_preserves_monotone",
    "contraction_ratio",
    "discounting_defect",
    "discretize",
    "evaluate_policy_exact",
    "extract_epsilon_policy",
    "greedy_policy",
    "horizon_for_bias",
    "iterate_to_fixed_point",
    "load_model",
    "oracle_horizon",
    "policy_backup",
    "project_atoms",
    "q_table",
    "q_value",
    "run_class_checks",
    "save_model",
    "simulate_policy",
    "simulate_strategy",
    "solve",
    "stationary_strategy",
    "sup_norm_distance",
    "tabular_strategy",
    "truncation_bias",
    "validate",
    "value_upper_bound",
    "zoo",
]
