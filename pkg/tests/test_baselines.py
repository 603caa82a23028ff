"""Baseline learner tests: naive PAC sweep, per-context UCB1, and EXP3."""
import numpy as np
import pytest

from lumpband.baselines import (
    exp3_constant_experts,
    naive_pair_budget,
    pac_naive,
    regret_ucb_per_context,
)
from lumpband.env import (
    EnvHandle,
    RewardModel,
    ValidationError,
    build_lumpable_instance,
    exact_policy_gap,
)


def test_naive_pair_budget_hand_value():
    import math
    assert naive_pair_budget(4, 3, 0.5, 0.1) == math.ceil(8 * math.log(240.0))


def test_pac_naive_zero_noise_exact_policy():
    m = build_lumpable_instance(6, 4, 2, seed=1)
    env = EnvHandle(m, seed=2, zero_noise=True)
    res = pac_naive(env, eps=0.4, delta=0.2)
    assert res.valid
    assert np.array_equal(res.policy.actions, np.argmax(m.A, axis=1))
    assert res.total_steps == env.t


def test_pac_naive_noisy_gap_within_eps():
    m = build_lumpable_instance(5, 3, 2, seed=3)
    env = EnvHandle(m, seed=4)
    res = pac_naive(env, eps=0.2, delta=0.1)
    assert res.valid
    assert exact_policy_gap(m, res.policy) <= 0.2


def test_pac_naive_zero_mass_context_defaults():
    m = RewardModel(mu=[[0.2, 0.8]], g=[0, 0], nu=[1.0, 0.0])
    env = EnvHandle(m, seed=5, zero_noise=True)
    res = pac_naive(env, eps=0.4, delta=0.2, max_steps=10_000)
    # the unreachable context never arrives; the sweep finishes without it
    assert int(res.policy.actions[0]) == 1
    assert int(res.policy.actions[1]) == 0


def test_pac_naive_step_cap_invalidates():
    m = build_lumpable_instance(8, 5, 2, seed=6)
    env = EnvHandle(m, seed=7)
    res = pac_naive(env, eps=0.05, delta=0.05, max_steps=300)
    assert not res.valid
    assert res.total_steps <= 300


def test_ucb_single_context_logarithmic_regret():
    m = RewardModel(mu=[[0.9, 0.5]], g=[0], nu=[1.0])
    env = EnvHandle(m, seed=8)
    tr = regret_ucb_per_context(env, 20_000)
    # sublinear: far below always-explore (0.2 * T) and above zero
    assert 0.0 < tr.regret < 0.05 * 20_000


def test_ucb_accounting_and_validation():
    m = build_lumpable_instance(4, 3, 2, seed=9)
    env = EnvHandle(m, seed=10)
    tr = regret_ucb_per_context(env, 5000)
    assert tr.steps == 5000 and env.t == 5000
    with pytest.raises(ValidationError):
        regret_ucb_per_context(env, 0)


def test_ucb_deterministic_given_env_seed():
    m = build_lumpable_instance(4, 3, 2, seed=11)
    r1 = regret_ucb_per_context(EnvHandle(m, seed=12), 3000).regret
    r2 = regret_ucb_per_context(EnvHandle(m, seed=12), 3000).regret
    assert r1 == r2


def test_exp3_sublinear_on_shared_optimum():
    # one arm is best in every context, so constant experts suffice
    m = RewardModel(mu=[[0.9, 0.2, 0.2], [0.8, 0.1, 0.3]],
                    g=[0, 0, 1, 1], nu=[0.25] * 4)
    env = EnvHandle(m, seed=13)
    tr = exp3_constant_experts(env, 60_000)
    uniform_rate = float(np.mean(m.A.max(axis=1, keepdims=True) - m.A))
    assert tr.regret < 0.6 * uniform_rate * 60_000


def test_exp3_deterministic_and_validated():
    m = build_lumpable_instance(4, 3, 2, seed=14)
    r1 = exp3_constant_experts(EnvHandle(m, seed=15), 2000).regret
    r2 = exp3_constant_experts(EnvHandle(m, seed=15), 2000).regret
    assert r1 == r2
    with pytest.raises(ValidationError):
        exp3_constant_experts(EnvHandle(m, seed=15), 0)


def test_exp3_flags_clipped_rewards():
    m = build_lumpable_instance(3, 2, 1, seed=16)  # gaussian noise leaves [0,1]
    tr = exp3_constant_experts(EnvHandle(m, seed=17), 500)
    assert any(f.startswith("rewards-clipped:") for f in tr.flags)
