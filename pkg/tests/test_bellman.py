import numpy as np
import pytest

from dpsolve import (
    bellman_backup,
    check_monotone,
    contraction_ratio,
    discounting_defect,
    greedy_policy,
    policy_backup,
    q_value,
    sup_norm_distance,
)
from dpsolve.mdp import FiniteMdp

from tests.util import random_mdp, random_policy, random_values, two_state_switcher


def q_oracle(model, s, a, f):
    # independent evaluation of r(s, a) + beta * sum_t f(t) p(s, a, t)
    return model.reward[s, a] + model.beta * sum(
        model.transition[s, a, t] * f[t] for t in range(model.n_states)
    )


def test_q_value_zero_continuation_gives_reward():
    m = two_state_switcher()
    f = np.zeros(2)
    for s in range(2):
        for a in range(2):
            assert q_value(m, s, a, f) == m.reward[s, a]


def test_q_value_constant_continuation_adds_discounted_constant():
    m = random_mdp(1)
    f = np.full(m.n_states, 4.0)
    for s in m.states:
        for a in m.feasible_actions(s):
            assert q_value(m, s, int(a), f) == pytest.approx(
                m.reward[s, a] + m.beta * 4.0, abs=1e-12
            )


def test_q_value_two_state_hand_computation():
    m = two_state_switcher(beta=0.5)
    f = np.array([2.0, 2.0])
    assert q_value(m, 0, 0, f) == pytest.approx(2.0)  # 1 + 0.5 * 2
    assert q_value(m, 0, 1, f) == pytest.approx(1.0)  # 0 + 0.5 * 2
    for s in range(2):
        for a in range(2):
            assert q_value(m, s, a, f) == pytest.approx(q_oracle(m, s, a, f), abs=1e-14)


def test_q_value_infeasible_action_rejected():
    m = random_mdp(7)
    infeasible = np.argwhere(~m.feasible)
    if infeasible.size == 0:
        pytest.skip("model has no infeasible pairs")
    s, a = map(int, infeasible[0])
    with pytest.raises(ValueError):
        q_value(m, s, a, np.zeros(m.n_states))


def test_backup_of_zero_is_max_immediate_reward():
    m = random_mdp(2)
    tf = bellman_backup(m, np.zeros(m.n_states))
    expected = [max(m.reward[s, a] for a in m.feasible_actions(s)) for s in m.states]
    assert np.allclose(tf, expected, atol=0)


def test_backup_two_state_examples():
    m = two_state_switcher(beta=0.5)
    assert np.array_equal(bellman_backup(m, np.zeros(2)), [1.0, 1.0])
    # (2, 2) is a fixed point: staying earns 1 + 0.5 * 2 = 2
    assert np.array_equal(bellman_backup(m, np.array([2.0, 2.0])), [2.0, 2.0])


def test_policy_backup_examples():
    m = two_state_switcher(beta=0.5)
    f = np.array([2.0, 2.0])
    stay, switch = np.array([0, 1]), np.array([1, 0])
    assert np.array_equal(policy_backup(m, stay, f), [2.0, 2.0])
    assert np.array_equal(policy_backup(m, switch, f), [1.0, 1.0])
    assert np.array_equal(policy_backup(m, stay, np.zeros(2)), [1.0, 1.0])
    with pytest.raises(ValueError):
        policy_backup(m, np.array([2, 0]), f)


def test_greedy_attains_backup_exactly():
    for seed in range(20):
        m = random_mdp(seed)
        rng = np.random.default_rng(seed + 100)
        f = random_values(rng, m, scale=5.0)
        result = greedy_policy(m, f)
        assert np.array_equal(result.values, bellman_backup(m, f))
        assert np.array_equal(policy_backup(m, result.policy, f), bellman_backup(m, f))
        assert np.all(result.slack == 0.0)


def test_greedy_two_state_and_tie_break():
    m = two_state_switcher(beta=0.5)
    result = greedy_policy(m, np.array([2.0, 2.0]))
    assert np.array_equal(result.policy, [0, 1])
    assert np.array_equal(result.values, [2.0, 2.0])
    # all-equal q values: the lowest action index wins
    flat = FiniteMdp(
        n_states=1,
        n_actions=3,
        feasible=np.ones((1, 3), dtype=bool),
        reward=np.zeros((1, 3)),
        transition=np.ones((1, 3, 1)),
        beta=0.5,
    )
    assert greedy_policy(flat, np.zeros(1)).policy[0] == 0
    # zero continuation: greedy is the per-state argmax of immediate reward
    m2 = random_mdp(9)
    g = greedy_policy(m2, np.zeros(m2.n_states))
    for s in m2.states:
        feasible = m2.feasible_actions(s)
        best = feasible[np.argmax(m2.reward[s, feasible])]
        assert g.policy[s] == best


def test_backup_dominates_any_policy_backup():
    rng = np.random.default_rng(0)
    for seed in range(10):
        m = random_mdp(seed)
        f = random_values(rng, m, scale=3.0)
        tf = bellman_backup(m, f)
        for _ in range(5):
            assert np.all(tf >= policy_backup(m, random_policy(rng, m), f) - 1e-15)


def test_monotone_check_on_ordered_pairs():
    m = random_mdp(11)
    rng = np.random.default_rng(11)
    g = random_values(rng, m, scale=2.0)
    assert check_monotone(m, g, g)  # equality case
    for _ in range(100):
        f = g + np.abs(random_values(rng, m))
        assert check_monotone(m, f, g)
    with pytest.raises(ValueError):
        check_monotone(m, g - 1.0, g)


def test_monotone_constant_shift_is_exact_discounting():
    m = random_mdp(13)
    rng = np.random.default_rng(13)
    g = random_values(rng, m)
    c = 0.75
    assert check_monotone(m, g + c, g)
    tf = bellman_backup(m, g + c)
    tg = bellman_backup(m, g)
    assert sup_norm_distance(tf, tg + m.beta * c) <= 1e-12


def test_discounting_defect_cases():
    m = random_mdp(17)
    rng = np.random.default_rng(17)
    f = random_values(rng, m, scale=3.0)
    assert discounting_defect(m, f, 0.0) == 0.0
    assert discounting_defect(m, f, 1.0) <= 1e-12
    for seed in range(100):
        mm = random_mdp(seed, beta=0.5 if seed % 2 else 0.9)
        r2 = np.random.default_rng(seed + 500)
        assert discounting_defect(mm, random_values(r2, mm, 5.0), r2.uniform(-10, 10)) <= 1e-12


def test_contraction_ratio_cases():
    m = random_mdp(19, beta=0.7)
    rng = np.random.default_rng(19)
    g = random_values(rng, m)
    # constant shift achieves the modulus exactly
    assert contraction_ratio(m, g + 2.0, g) == pytest.approx(0.7, abs=1e-12)
    for _ in range(100):
        f = random_values(rng, m, scale=4.0)
        h = random_values(rng, m, scale=4.0)
        assert contraction_ratio(m, f, h) <= m.beta + 1e-12
        lam = random_policy(rng, m)
        assert contraction_ratio(m, f, h, policy=lam) <= m.beta + 1e-12
    with pytest.raises(ValueError):
        contraction_ratio(m, g, g)


def test_contraction_ratio_can_be_strictly_below_modulus():
    # both states feed state 0 under every action, so a difference at
    # state 1 is never propagated and the ratio collapses
    transition = np.zeros((2, 2, 2))
    transition[:, :, 0] = 1.0
    m = FiniteMdp(
        n_states=2,
        n_actions=2,
        feasible=np.ones((2, 2), dtype=bool),
        reward=np.zeros((2, 2)),
        transition=transition,
        beta=0.9,
    )
    f = np.array([0.0, 5.0])
    g = np.array([0.0, -5.0])
    assert contraction_ratio(m, f, g) < 0.9
