"""Monte Carlo estimation of discounted policy and strategy values.

Simulates the controlled chain for a fixed horizon and averages the
discounted returns. The horizon truncation bias is bounded by
beta^H * max|r| / (1 - beta) and always reported, never hidden.

Stream-split rule: trajectory ``i`` draws its ``horizon`` uniform
variates up front from ``numpy.random.default_rng([seed, i])`` and
consumes the t-th variate at step t, so serial, vectorized, and parallel
executions all see identical randomness. Next states are sampled by
inverse CDF over the transition row in state-index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import FiniteHorizonStrategy, FiniteMdp, assert_feasible_policy, require_valid


@dataclass(frozen=True)
class RolloutConfig:
    """Simulation plan: trajectory count, horizon, seed, start state."""

    n_trajectories: int
    horizon: int
    seed: int = 0
    initial_state: int = 0

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError(f"n_trajectories must be positive, got {self.n_trajectories}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")


@dataclass(frozen=True)
class RolloutEstimate:
    """Sample mean of discounted returns with its two error terms.

    ``standard_error`` is the sample standard deviation over
    sqrt(n_trajectories); ``truncation_bias_bound`` bounds the
    deterministic bias from cutting the horizon.
    """

    mean: float
    standard_error: float
    truncation_bias_bound: float


def truncation_bias(model: FiniteMdp, horizon: int) -> float:
    """beta^horizon * max|r| / (1 - beta), the tail left out of the sum."""
    return model.beta**horizon * model.max_abs_reward / (1.0 - model.beta)


def horizon_for_bias(model: FiniteMdp, budget: float) -> int:
    """Smallest horizon whose truncation bias bound is within ``budget``."""
    require_valid(model)
    if budget <= 0.0:
        raise ValueError(f"bias budget must be positive, got {budget}")
    scale = model.max_abs_reward / (1.0 - model.beta)
    if scale <= budget:
        return 1
    horizon = max(1, math.ceil(math.log(budget / scale) / math.log(model.beta)))
    while truncation_bias(model, horizon) > budget:
        horizon += 1
    return horizon


def trajectory_uniforms(seed: int, index: int, horizon: int) -> np.ndarray:
    """The uniform variates trajectory ``index`` consumes, one per step."""
    return np.random.default_rng([seed, index]).random(horizon)


def _check_start(model: FiniteMdp, cfg: RolloutConfig) -> None:
    if not 0 <= cfg.initial_state < model.n_states:
        raise ValueError(f"initial state {cfg.initial_state} out of range")


def _estimate(returns: np.ndarray, model: FiniteMdp, horizon: int) -> RolloutEstimate:
    n = returns.size
    se = float(np.std(returns, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RolloutEstimate(
        mean=float(np.mean(returns)),
        standard_error=se,
        truncation_bias_bound=truncation_bias(model, horizon),
    )


def simulate_policy(model: FiniteMdp, policy, cfg: RolloutConfig) -> RolloutEstimate:
    """Estimate the value of a stationary policy at ``cfg.initial_state``.

    Trajectories advance in vectorized lockstep but each consumes its own
    random stream, so the result is bit-identical to simulating the same
    policy wrapped as a history-ignoring strategy.
    """
    require_valid(model)
    policy = assert_feasible_policy(model, policy)
    _check_start(model, cfg)
    n, H = cfg.n_trajectories, cfg.horizon
    cumulative = np.cumsum(model.transition, axis=2)
    uniforms = np.stack([trajectory_uniforms(cfg.seed, i, H) for i in range(n)])
    states = np.full(n, cfg.initial_state, dtype=int)
    returns = np.zeros(n)
    discount = 1.0
    for t in range(H):
        actions = policy[states]
        returns += discount * model.reward[states, actions]
        rows = cumulative[states, actions]
        hit = uniforms[:, t, None] < rows
        states = np.where(hit.any(axis=1), hit.argmax(axis=1), model.n_states - 1)
        discount *= model.beta
    return _estimate(returns, model, H)


def simulate_strategy(
    model: FiniteMdp, strategy: FiniteHorizonStrategy, cfg: RolloutConfig
) -> RolloutEstimate:
    """Estimate the value of a history-dependent strategy.

    Feeds the full history (visited states, taken actions) to the
    strategy's decision function each step. Raises ValueError naming the
    timestep if a decision is infeasible at the current state.
    """
    require_valid(model)
    _check_start(model, cfg)
    if strategy.horizon < cfg.horizon:
        raise ValueError(
            f"strategy horizon {strategy.horizon} is shorter than "
            f"simulation horizon {cfg.horizon}"
        )
    n, H = cfg.n_trajectories, cfg.horizon
    cumulative = np.cumsum(model.transition, axis=2)
    returns = np.zeros(n)
    for i in range(n):
        uniforms = trajectory_uniforms(cfg.seed, i, H)
        states = [cfg.initial_state]
        actions: list[int] = []
        total = 0.0
        discount = 1.0
        for t in range(H):
            s = states[-1]
            a = int(strategy.decide(tuple(states), tuple(actions)))
            if not 0 <= a < model.n_actions or not model.feasible[s, a]:
                raise ValueError(
                    f"strategy chose infeasible action {a} at state {s}, timestep {t + 1}"
                )
            total += discount * model.reward[s, a]
            row = cumulative[s, a]
            nxt = min(int(np.searchsorted(row, uniforms[t], side="right")), model.n_states - 1)
            actions.append(a)
            states.append(nxt)
            discount *= model.beta
        returns[i] = total
    return _estimate(returns, model, H)
