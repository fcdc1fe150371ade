import numpy as np
import pytest

from dpsolve import (
    FiniteMdp,
    RolloutConfig,
    evaluate_policy_exact,
    horizon_for_bias,
    simulate_policy,
    simulate_strategy,
    solve,
    stationary_strategy,
    truncation_bias,
)
from dpsolve.mdp import FiniteHorizonStrategy, all_histories, tabular_strategy

from tests.util import constant_reward_mdp, random_mdp, random_policy, two_state_switcher


def deterministic_chain(beta=0.9):
    # 3-state cycle with a single action; rewards 1, 2, 3
    transition = np.zeros((3, 1, 3))
    for s in range(3):
        transition[s, 0, (s + 1) % 3] = 1.0
    return FiniteMdp(
        n_states=3,
        n_actions=1,
        feasible=np.ones((3, 1), dtype=bool),
        reward=np.array([[1.0], [2.0], [3.0]]),
        transition=transition,
        beta=beta,
    )


def test_deterministic_rollout_is_exact_truncated_sum():
    m = deterministic_chain()
    cfg = RolloutConfig(n_trajectories=8, horizon=25, seed=3, initial_state=0)
    est = simulate_policy(m, np.zeros(3, dtype=int), cfg)
    # oracle: accumulate the cycle rewards in simulation order
    total, discount, s = 0.0, 1.0, 0
    for _ in range(cfg.horizon):
        total += discount * m.reward[s, 0]
        discount *= m.beta
        s = (s + 1) % 3
    assert est.mean == total
    assert est.standard_error == 0.0


def test_constant_reward_rollout_matches_geometric_sum():
    m = constant_reward_mdp(1.5, 0.8)
    cfg = RolloutConfig(n_trajectories=16, horizon=40, seed=11)
    est = simulate_policy(m, np.zeros(m.n_states, dtype=int), cfg)
    assert est.mean == pytest.approx(1.5 * (1 - 0.8**40) / 0.2, abs=1e-12)
    assert est.standard_error == 0.0
    assert est.truncation_bias_bound == pytest.approx(1.5 * 0.8**40 / 0.2)


def test_stochastic_rollout_brackets_exact_value():
    m = random_mdp(101, n_states=3, n_actions=2, dense=True, beta=0.9)
    lam = solve(m, tol=1e-10).policy
    exact = evaluate_policy_exact(m, lam)[0]
    horizon = horizon_for_bias(m, 1e-6)
    cfg = RolloutConfig(n_trajectories=10_000, horizon=horizon, seed=5, initial_state=0)
    est = simulate_policy(m, lam, cfg)
    assert abs(est.mean - exact) <= 3 * est.standard_error + est.truncation_bias_bound


def test_seed_determinism():
    m = random_mdp(7, beta=0.9)
    lam = random_policy(np.random.default_rng(0), m)
    cfg = RolloutConfig(n_trajectories=64, horizon=30, seed=123)
    assert simulate_policy(m, lam, cfg) == simulate_policy(m, lam, cfg)
    changed = RolloutConfig(n_trajectories=64, horizon=30, seed=124)
    assert simulate_policy(m, lam, cfg) != simulate_policy(m, lam, changed)


def test_stationary_strategy_agrees_bit_for_bit():
    m = random_mdp(13, n_states=4, n_actions=3, dense=True, beta=0.85)
    lam = random_policy(np.random.default_rng(1), m)
    cfg = RolloutConfig(n_trajectories=50, horizon=37, seed=99, initial_state=2)
    direct = simulate_policy(m, lam, cfg)
    wrapped = simulate_strategy(m, stationary_strategy(m, lam, cfg.horizon), cfg)
    assert direct.mean == wrapped.mean
    assert direct.standard_error == wrapped.standard_error
    assert direct.truncation_bias_bound == wrapped.truncation_bias_bound


def test_horizon_one_strategy_mean_is_first_reward():
    m = two_state_switcher()
    strat = FiniteHorizonStrategy(horizon=1, decide=lambda states, actions: 1)
    cfg = RolloutConfig(n_trajectories=5, horizon=1, seed=0, initial_state=0)
    est = simulate_strategy(m, strat, cfg)
    assert est.mean == m.reward[0, 1]


def test_history_dependent_strategy_against_recursive_oracle():
    m = random_mdp(5, n_states=2, n_actions=2, dense=True, beta=0.5)
    horizon = 3
    rng = np.random.default_rng(17)
    table = {
        h: int(rng.choice(m.feasible_actions(h[-1])))
        for h in all_histories(m, horizon)
    }
    strat = tabular_strategy(table, horizon)

    def interleave(states, actions):
        key = []
        for t, s in enumerate(states):
            key.append(s)
            if t < len(actions):
                key.append(actions[t])
        return tuple(key)

    def exact(states, actions):
        s = states[-1]
        a = table[interleave(states, actions)]
        value = m.reward[s, a]
        if len(states) == horizon:
            return value
        tail = sum(
            m.transition[s, a, t] * exact(states + (t,), actions + (a,))
            for t in range(m.n_states)
        )
        return value + m.beta * tail

    cfg = RolloutConfig(n_trajectories=20_000, horizon=horizon, seed=29, initial_state=0)
    est = simulate_strategy(m, strat, cfg)
    # both sides are truncated at the same horizon: no bias term needed
    assert abs(est.mean - exact((0,), ())) <= 3 * est.standard_error + 1e-12


def test_infeasible_decision_names_timestep():
    feasible = np.array([[True, True], [True, False]])
    reward = np.where(feasible, 1.0, np.nan)
    transition = np.zeros((2, 2, 2))
    transition[0, 0, 1] = 1.0
    transition[0, 1, 1] = 1.0  # action 1 moves to state 1, where it is infeasible
    transition[1, 0, 0] = 1.0
    m = FiniteMdp(2, 2, feasible, reward, transition, beta=0.5)
    # always plays action 1: infeasible once state 1 is reached at step 2
    strat = FiniteHorizonStrategy(horizon=5, decide=lambda states, actions: 1)
    cfg = RolloutConfig(n_trajectories=2, horizon=5, seed=0, initial_state=0)
    with pytest.raises(ValueError, match="timestep 2"):
        simulate_strategy(m, strat, cfg)


def test_strategy_horizon_must_cover_simulation():
    m = two_state_switcher()
    strat = stationary_strategy(m, [0, 1], horizon=3)
    with pytest.raises(ValueError, match="horizon"):
        simulate_strategy(m, strat, RolloutConfig(n_trajectories=1, horizon=5, seed=0))


def test_greedy_policy_dominates_sampled_strategies():
    m = random_mdp(5, n_states=2, n_actions=2, dense=True, beta=0.5)
    horizon = 3
    lam = solve(m, tol=1e-10).policy
    cfg = RolloutConfig(n_trajectories=4000, horizon=horizon, seed=31, initial_state=0)
    greedy_est = simulate_policy(m, lam, cfg)
    rng = np.random.default_rng(41)
    for _ in range(5):
        table = {
            h: int(rng.choice(m.feasible_actions(h[-1]))) for h in all_histories(m, horizon)
        }
        est = simulate_strategy(m, tabular_strategy(table, horizon), cfg)
        slack = 3 * (greedy_est.standard_error + est.standard_error)
        slack += greedy_est.truncation_bias_bound + est.truncation_bias_bound
        assert greedy_est.mean >= est.mean - slack


def test_horizon_for_bias_is_minimal():
    m = random_mdp(3, beta=0.9)
    budget = 1e-5
    horizon = horizon_for_bias(m, budget)
    assert truncation_bias(m, horizon) <= budget
    if horizon > 1:
        assert truncation_bias(m, horizon - 1) > budget


def test_config_validation():
    with pytest.raises(ValueError):
        RolloutConfig(n_trajectories=0, horizon=5)
    with pytest.raises(ValueError):
        RolloutConfig(n_trajectories=1, horizon=0)
    with pytest.raises(ValueError):
        RolloutConfig(n_trajectories=1, horizon=1, seed=-3)
    m = two_state_switcher()
    with pytest.raises(ValueError, match="initial state"):
        simulate_policy(m, [0, 1], RolloutConfig(n_trajectories=1, horizon=1, initial_state=9))
