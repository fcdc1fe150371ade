"""One-step dynamic-programming operators and their algebraic checkers.

The state-action value of an estimate f is

    q(s, a) = r(s, a) + beta * sum_s' f(s') p(s, a, s'),

the optimality backup takes the per-state max of q over feasible actions,
and the policy backup plugs in a fixed stationary policy. The checkers
measure, on concrete inputs, the monotonicity, discounting, and
contraction properties these operators are supposed to satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import FiniteMdp, assert_feasible_policy, sup_norm_distance

# Slack for exact algebraic identities: ~100x double epsilon accumulated
# over small sums.
IDENTITY_TOL = 1e-12


def _as_values(model: FiniteMdp, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (model.n_states,):
        raise ValueError(f"value function shape {values.shape} != ({model.n_states},)")
    return values


def q_table(model: FiniteMdp, values) -> np.ndarray:
    """Full (S, A) state-action value table for the estimate ``values``.

    Entries at infeasible pairs are NaN. The optimality and policy
    backups both read from this one computation, so their outputs agree
    bit-for-bit where they should.
    """
    values = _as_values(model, values)
    return model.reward + model.beta * (model.transition @ values)


def q_value(model: FiniteMdp, state: int, action: int, values) -> float:
    """q(state, action) for the estimate ``values``; action must be feasible."""
    values = _as_values(model, values)
    if not 0 <= action < model.n_actions or not model.feasible[state, action]:
        raise ValueError(f"action {action} is infeasible at state {state}")
    continuation = float(np.dot(model.transition[state, action], values))
    return float(model.reward[state, action] + model.beta * continuation)


def bellman_backup(model: FiniteMdp, values) -> np.ndarray:
    """Per-state max of q(s, a) over feasible actions (the optimality backup)."""
    q = q_table(model, values)
    return np.max(np.where(model.feasible, q, -np.inf), axis=1)


def policy_backup(model: FiniteMdp, policy, values) -> np.ndarray:
    """One-step backup under a fixed stationary policy: q(s, policy(s))."""
    policy = assert_feasible_policy(model, policy)
    q = q_table(model, values)
    return q[np.arange(model.n_states), policy]


@dataclass(frozen=True, eq=False)
class GreedyResult:
    """A per-state maximizer of q(., ., values) with its achieved values.

    ``slack`` is the per-state gap between the feasible maximum and the
    value the chosen action achieves; identically zero here because the
    max over a finite feasible set is attained.
    """

    policy: np.ndarray
    values: np.ndarray
    slack: np.ndarray


def greedy_policy(model: FiniteMdp, values) -> GreedyResult:
    """Lowest-index action attaining the per-state max of q.

    Ties break to the smallest action index so runs are reproducible.
    """
    q = np.where(model.feasible, q_table(model, values), -np.inf)
    policy = np.argmax(q, axis=1)
    best = q[np.arange(model.n_states), policy]
    return GreedyResult(policy=policy, values=best, slack=np.zeros(model.n_states))


def check_monotone(model: FiniteMdp, f, g, tol: float = IDENTITY_TOL) -> bool:
    """True iff backup(f) >= backup(g) pointwise within ``tol``.

    Requires f >= g pointwise; raises ValueError otherwise since the
    monotonicity property only speaks to ordered pairs.
    """
    f = _as_values(model, f)
    g = _as_values(model, g)
    if np.any(f < g):
        raise ValueError("monotonicity check requires f >= g pointwise")
    return bool(np.all(bellman_backup(model, f) >= bellman_backup(model, g) - tol))


def discounting_defect(model: FiniteMdp, f, shift: float) -> float:
    """Sup-norm deviation of backup(f + c) from backup(f) + beta * c.

    Exactly zero in exact arithmetic; at most ~1e-12 in floating point
    for desk-scale models.
    """
    f = _as_values(model, f)
    shifted = bellman_backup(model, f + float(shift))
    return sup_norm_distance(shifted, bellman_backup(model, f) + model.beta * float(shift))


def contraction_ratio(model: FiniteMdp, f, g, policy=None) -> float:
    """||backup(f) - backup(g)|| / ||f - g||, at most beta for any pair.

    With ``policy`` given, measures the policy backup instead of the
    optimality backup. Raises ValueError when f == g (ratio undefined).
    """
    f = _as_values(model, f)
    g = _as_values(model, g)
    denominator = sup_norm_distance(f, g)
    if denominator == 0.0:
        raise ValueError("contraction ratio undefined for identical value functions")
    if policy is None:
        tf, tg = bellman_backup(model, f), bellman_backup(model, g)
    else:
        tf, tg = policy_backup(model, policy, f), policy_backup(model, policy, g)
    return sup_norm_distance(tf, tg) / denominator
