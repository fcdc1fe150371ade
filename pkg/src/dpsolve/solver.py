"""Optimal-value solver for finite discounted decision processes.

``solve`` runs value iteration (Picard iteration of the optimality
backup, a beta-contraction in sup-norm) from the zero function and
extracts the greedy stationary policy. ``evaluate_policy_exact`` solves
the linear policy-value system to machine precision, which gives an
oracle independent of the contraction path; ``backward_induction`` is a
second independent oracle: the exact finite-horizon optimum, which is
exhaustive over all history-dependent strategies by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bellman import bellman_backup, greedy_policy
from .fixed_point import (
    DEFAULT_MAX_ITERS,
    ContractionMap,
    IterationTrace,
    iterate_to_fixed_point,
)
from .mdp import FiniteMdp, assert_feasible_policy, require_valid, sup_norm_distance

# Backward induction enumerates nothing but still recomputes the full
# kernel each stage in plain Python; keep it at desk scale.
MAX_ORACLE_STATE_ACTIONS = 64


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solver output.

    ``values`` is within the requested tolerance of the optimal value
    function (a posteriori contraction bound); ``policy`` is greedy for
    it. ``bellman_residual`` is ||backup(values) - values||, and
    ``epsilon_certificate`` is a guaranteed upper bound on the sup-norm
    optimality gap of ``policy`` (see :func:`certify_epsilon_optimal`).
    """

    values: np.ndarray
    policy: np.ndarray
    trace: IterationTrace
    bellman_residual: float
    epsilon_certificate: float


def solve(model: FiniteMdp, tol: float = 1e-8, max_iters: int = DEFAULT_MAX_ITERS) -> SolveResult:
    """Value-iterate to within ``tol`` of the optimal value function.

    Iteration starts from the zero function so traces are reproducible.
    Raises NonConvergenceError only if ``max_iters`` is exhausted, which
    cannot happen for a valid discount factor and a sane budget.
    """
    require_valid(model)
    cmap = ContractionMap(
        apply=lambda v: bellman_backup(model, v),
        modulus=model.beta,
        metric=sup_norm_distance,
    )
    values, trace = iterate_to_fixed_point(cmap, np.zeros(model.n_states), tol, max_iters)
    greedy = greedy_policy(model, values)
    residual = sup_norm_distance(bellman_backup(model, values), values)
    certificate = certify_epsilon_optimal(model, greedy.policy, values)
    return SolveResult(
        values=values,
        policy=greedy.policy,
        trace=trace,
        bellman_residual=residual,
        epsilon_certificate=certificate,
    )


def evaluate_policy_exact(model: FiniteMdp, policy) -> np.ndarray:
    """Exact value of a stationary policy via its linear system.

    Solves (I - beta * P_policy) w = r_policy directly (dense LU with
    partial pivoting); the matrix is nonsingular because beta < 1 and
    P_policy is stochastic.
    """
    require_valid(model)
    policy = assert_feasible_policy(model, policy)
    idx = np.arange(model.n_states)
    p_policy = model.transition[idx, policy]
    r_policy = model.reward[idx, policy]
    system = np.eye(model.n_states) - model.beta * p_policy
    try:
        return np.linalg.solve(system, r_policy)
    except np.linalg.LinAlgError as exc:  # unreachable for a valid model
        raise RuntimeError(f"singular policy-value system: {exc}") from exc


def extract_epsilon_policy(model: FiniteMdp, values, eps: float) -> np.ndarray:
    """Stationary policy whose backup loses at most eps*(1-beta) on ``values``.

    For a near-fixed-point ``values`` the greedy policy satisfies the
    slack condition

        policy_backup(policy, values) >= values - eps * (1 - beta)

    pointwise, which propagates to an exact policy value within eps of
    ``values``. Raises RuntimeError if no feasible action meets the
    slack somewhere, i.e. ``values`` was too far from the fixed point
    for the requested eps.
    """
    require_valid(model)
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    values = np.asarray(values, dtype=float)
    greedy = greedy_policy(model, values)
    allowed = eps * (1.0 - model.beta)
    deficit = values - greedy.values
    worst = int(np.argmax(deficit))
    if deficit[worst] > allowed:
        raise RuntimeError(
            f"no feasible action at state {worst} comes within eps*(1-beta)="
            f"{allowed:.3e} of the supplied values (deficit {deficit[worst]:.3e}); "
            "the values are not close enough to the fixed point"
        )
    return greedy.policy


def certify_epsilon_optimal(model: FiniteMdp, policy, candidate_values) -> float:
    """Guaranteed sup-norm bound on the optimality gap of ``policy``.

    With w the exact policy value and rho = ||backup(v) - v|| for the
    candidate v, the optimal value sits within rho/(1-beta) of v, so

        ||optimal - w|| <= ||v - w|| + rho / (1 - beta).

    The returned bound always dominates the true gap.
    """
    require_valid(model)
    candidate = np.asarray(candidate_values, dtype=float)
    w = evaluate_policy_exact(model, policy)
    rho = sup_norm_distance(bellman_backup(model, candidate), candidate)
    return sup_norm_distance(candidate, w) + rho / (1.0 - model.beta)


def backward_induction(model: FiniteMdp, horizon: int) -> np.ndarray:
    """Exact optimum over all strategies for ``horizon`` periods.

    Plain-Python backward recursion, deliberately independent of the
    vectorized backup used by :func:`solve`. The result is within
    beta^horizon * max|r| / (1 - beta) of the infinite-horizon optimum.
    Guarded to models with at most ``MAX_ORACLE_STATE_ACTIONS``
    state-action pairs.
    """
    require_valid(model)
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    if model.n_states * model.n_actions > MAX_ORACLE_STATE_ACTIONS:
        raise ValueError(
            "backward induction oracle is limited to "
            f"{MAX_ORACLE_STATE_ACTIONS} state-action pairs, got "
            f"{model.n_states * model.n_actions}"
        )
    S = model.n_states
    beta = model.beta
    feasible = [list(map(int, model.feasible_actions(s))) for s in range(S)]
    reward = model.reward.tolist()
    kernel = model.transition.tolist()
    values = [0.0] * S
    for _ in range(horizon):
        values = [
            max(
                reward[s][a] + beta * sum(kernel[s][a][t] * values[t] for t in range(S))
                for a in feasible[s]
            )
            for s in range(S)
        ]
    return np.array(values)


def oracle_horizon(model: FiniteMdp, tol: float) -> int:
    """Horizon whose truncation bound beta^H * max|r|/(1-beta) is <= tol/10.

    Keeps the oracle's own error negligible next to a solver tolerance
    it is checking.
    """
    require_valid(model)
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    budget = tol / 10.0
    scale = model.max_abs_reward / (1.0 - model.beta)
    if scale <= budget:
        return 1
    horizon = max(1, math.ceil(math.log(budget / scale) / math.log(model.beta)))
    while model.beta**horizon * scale > budget:
        horizon += 1
    return horizon


def bellman_residuals(model: FiniteMdp, values) -> np.ndarray:
    """Per-state |backup(values) - values|, as reported in CLI tables."""
    values = np.asarray(values, dtype=float)
    return np.abs(bellman_backup(model, values) - values)
