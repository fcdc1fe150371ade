"""Shared test fixtures: model generators and small oracles."""

import numpy as np

from dpsolve import FiniteMdp


def random_mdp(seed, n_states=None, n_actions=None, beta=0.9, reward_scale=1.0, dense=False):
    """Seeded random model: random feasible sets, rewards, stochastic rows."""
    rng = np.random.default_rng(seed)
    S = int(n_states if n_states is not None else rng.integers(2, 7))
    A = int(n_actions if n_actions is not None else rng.integers(1, 5))
    feasible = rng.random((S, A)) < 0.7
    if dense:
        feasible[:] = True
    for s in range(S):
        if not feasible[s].any():
            feasible[s, rng.integers(A)] = True
    reward = np.where(feasible, rng.uniform(-reward_scale, reward_scale, (S, A)), np.nan)
    transition = np.zeros((S, A, S))
    for s in range(S):
        for a in range(A):
            if feasible[s, a]:
                row = rng.random(S) + 1e-3
                transition[s, a] = row / row.sum()
    return FiniteMdp(
        n_states=S, n_actions=A, feasible=feasible, reward=reward,
        transition=transition, beta=beta,
    )


def random_policy(rng, model):
    """Uniformly random feasible stationary policy."""
    return np.array([rng.choice(model.feasible_actions(s)) for s in model.states])


def random_values(rng, model, scale=1.0):
    return rng.uniform(-scale, scale, model.n_states)


def two_state_switcher(beta=0.5):
    """Deterministic 2-state model: action a moves to state a, r(s, a) = 1 iff a == s."""
    transition = np.zeros((2, 2, 2))
    for s in range(2):
        for a in range(2):
            transition[s, a, a] = 1.0
    return FiniteMdp(
        n_states=2,
        n_actions=2,
        feasible=np.ones((2, 2), dtype=bool),
        reward=np.array([[1.0, 0.0], [0.0, 1.0]]),
        transition=transition,
        beta=beta,
    )


def constant_reward_mdp(c, beta, n_states=3, seed=0):
    """All feasible rewards equal c, random stochastic transitions."""
    rng = np.random.default_rng(seed)
    S = n_states
    rows = rng.random((S, 2, S)) + 0.1
    rows /= rows.sum(axis=2, keepdims=True)
    return FiniteMdp(
        n_states=S,
        n_actions=2,
        feasible=np.ones((S, 2), dtype=bool),
        reward=np.full((S, 2), float(c)),
        transition=rows,
        beta=beta,
    )
