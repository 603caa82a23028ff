"""Environment tests: model invariants, generators, replay determinism,
pseudo-regret accounting, and exact gap evaluation."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lumpband.env import (
    BERNOULLI,
    GAUSSIAN,
    ConfigurationError,
    EnvHandle,
    Policy,
    ProtocolError,
    RewardModel,
    ValidationError,
    build_from_spec,
    build_hard_instance,
    build_lowrank_instance,
    build_lumpable_instance,
    exact_policy_gap,
    model_from_json,
    model_to_json,
)


def test_explicit_construction_echoed_back():
    m = build_lumpable_instance(S=4, K=2, r=2, nu="uniform", blocks="equal",
                                mu=[[1, 0], [0, 1]])
    assert m.g.tolist() == [0, 0, 1, 1]
    assert m.A.tolist() == [[1, 0], [1, 0], [0, 1], [0, 1]]
    assert np.allclose(m.block_mass(), [0.5, 0.5])


def test_degenerate_single_cell():
    m = build_lumpable_instance(S=1, K=1, r=1, mu=[[0.3]])
    assert m.A.shape == (1, 1)
    assert m.block_mass().tolist() == [1.0]


def test_generator_determinism():
    a = build_lumpable_instance(60, 30, 3, blocks="random", seed=7)
    b = build_lumpable_instance(60, 30, 3, blocks="random", seed=7)
    assert np.array_equal(a.mu, b.mu)
    assert np.array_equal(a.g, b.g)
    assert np.array_equal(a.nu, b.nu)


def test_model_validation_errors():
    with pytest.raises(ValidationError):
        RewardModel(mu=[[0.5, 0.5]], g=[0, 0], nu=[0.5, 0.6])  # nu sum != 1
    with pytest.raises(ValidationError):
        RewardModel(mu=[[0.5], [0.5]], g=[0, 0], nu=[0.5, 0.5])  # block 1 empty
    with pytest.raises(ValidationError):
        RewardModel(mu=[[1.5]], g=[0], nu=[1.0])  # mu out of range
    with pytest.raises(ConfigurationError):
        build_lumpable_instance(S=2, K=2, r=3)


def test_lumpability_within_blocks():
    m = build_lumpable_instance(30, 8, 4, blocks="random", seed=5)
    for b in range(m.r):
        rows = m.A[m.g == b]
        assert np.all(rows == rows[0])


# -- interaction protocol -----------------------------------------------------


def test_replay_determinism_bit_exact():
    m = build_lumpable_instance(10, 4, 2, seed=1)
    traces = []
    for _ in range(2):
        env = EnvHandle(m, seed=42)
        tr = []
        for k in range(200):
            i = env.sample_context()
            tr.append((i, env.pull(i, k % 4)))
        traces.append(tr)
    assert traces[0] == traces[1]


def test_batch_matches_scalar_streams():
    m = build_lumpable_instance(7, 3, 2, seed=2)
    e1, e2 = EnvHandle(m, seed=9), EnvHandle(m, seed=9)
    ctx = e2.sample_contexts(50)
    arms = np.arange(50) % 3
    y2 = e2.pull_many(ctx, arms)
    y1 = []
    for k in range(50):
        i = e1.sample_context()
        assert i == ctx[k]
        y1.append(e1.pull(i, int(arms[k])))
    assert np.allclose(y1, y2)


def test_protocol_errors():
    m = build_lumpable_instance(4, 2, 2, seed=0)
    env = EnvHandle(m, seed=0)
    with pytest.raises(ProtocolError):
        env.pull(0, 0)  # no context sampled
    i = env.sample_context()
    with pytest.raises(ProtocolError):
        env.pull((i + 1) % 4, 0)  # wrong context
    env = EnvHandle(m, seed=0)
    env.sample_context()
    with pytest.raises(ProtocolError):
        env.sample_context()  # previous context unanswered
    env = EnvHandle(m, seed=0)
    with pytest.raises(ValueError):
        env.pull_many(np.array([0]), np.array([5]))  # arm out of range


def test_point_mass_context():
    m = RewardModel(mu=[[0.5, 0.6]], g=[0, 0, 0], nu=[0, 0, 1])
    env = EnvHandle(m, seed=3)
    assert all(int(c) == 2 for c in env.sample_contexts(100))


def test_context_frequencies_match_nu():
    m = build_lumpable_instance(4, 2, 2, seed=0)
    env = EnvHandle(m, seed=1)
    ctx = env.sample_contexts(10 ** 6)
    env.pull_many(ctx, np.zeros(10 ** 6, dtype=np.int64))
    freq = np.bincount(ctx, minlength=4) / 1e6
    assert np.all(np.abs(freq - 0.25) < 0.005)  # 3-sigma CLT margin


def test_zero_noise_hook_exact():
    m = build_lumpable_instance(5, 3, 2, seed=4)
    env = EnvHandle(m, seed=5, zero_noise=True)
    ctx = env.sample_contexts(30)
    arms = np.arange(30) % 3
    assert np.array_equal(env.pull_many(ctx, arms), m.A[ctx, arms])


def test_bernoulli_mean_concentrates():
    m = RewardModel(mu=[[0.7]], g=[0], nu=[1.0], noise=BERNOULLI)
    env = EnvHandle(m, seed=6)
    ctx = env.sample_contexts(10 ** 5)
    y = env.pull_many(ctx, np.zeros(10 ** 5, dtype=np.int64))
    assert set(np.unique(y)) <= {0.0, 1.0}
    assert abs(y.mean() - 0.7) < 0.0044  # 3-sigma binomial bound


def test_pseudo_regret_accounting_matches_trace():
    m = build_lumpable_instance(6, 4, 3, seed=7)
    env = EnvHandle(m, seed=8, record_trace=True)
    rng = np.random.default_rng(0)
    for _ in range(5):
        ctx = env.sample_contexts(100)
        env.pull_many(ctx, rng.integers(0, 4, 100))
    recomputed = 0.0
    for ctx, arms, _ in env.trace_log:
        recomputed += float(np.sum(m.A[ctx].max(axis=1) - m.A[ctx, arms]))
    assert env.total_regret == pytest.approx(recomputed, abs=1e-9)
    assert env.t == 500


def test_optimal_pull_zero_increment():
    m = build_lumpable_instance(4, 3, 2, seed=9)
    env = EnvHandle(m, seed=10)
    i = env.sample_context()
    env.pull(i, int(np.argmax(m.A[i])))
    assert env.total_regret == 0.0


# -- policies and gaps --------------------------------------------------------


def test_gap_of_argmax_policy_is_zero():
    m = build_lumpable_instance(12, 5, 3, seed=11)
    assert exact_policy_gap(m, Policy(np.argmax(m.A, axis=1))) == 0.0


def test_gap_hand_value():
    m = RewardModel(mu=[[1, 0], [0, 1]], g=[0, 1], nu=[0.5, 0.5])
    assert exact_policy_gap(m, Policy([1, 1])) == pytest.approx(0.5)


def test_gap_ignores_zero_mass_contexts():
    m = RewardModel(mu=[[1, 0]], g=[0, 0], nu=[1.0, 0.0])
    assert exact_policy_gap(m, Policy([0, 1])) == 0.0


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_gap_nonnegative_and_bounded(seed):
    rng = np.random.default_rng(seed)
    m = build_lumpable_instance(8, 5, 3, blocks="random", seed=seed % 1000)
    pol = Policy(rng.integers(0, 5, 8))
    gap = exact_policy_gap(m, pol)
    assert 0.0 <= gap <= float(m.A.max() - m.A.min()) + 1e-12


# -- hard instances -----------------------------------------------------------


def test_hard_case1_structure():
    m = build_hard_instance(1, S=8, K=2, r=2, eps=0.1, seed=0)
    for b in range(m.r):
        row = sorted(m.mu[b])
        assert row == pytest.approx([0.5, 0.6])
    assert m.noise == BERNOULLI
    assert np.allclose(m.nu, 1 / 8)


def test_hard_case1_requires_r_ge_K():
    with pytest.raises(ValidationError):
        build_hard_instance(1, S=8, K=4, r=2, eps=0.1)


def test_hard_case2_zero_eps_rejected_and_structure():
    with pytest.raises(ValidationError):
        build_hard_instance(2, S=6, K=3, r=2, eps=0.0)
    m = build_hard_instance(2, S=6, K=3, r=2, eps=0.2, seed=1)
    assert m.r == 2 and np.allclose(m.nu, 1 / 6)
    assert sorted(np.unique(m.mu).tolist()) == pytest.approx([0.5, 0.7])


def test_hard_case3_literal_nu():
    m = build_hard_instance(3, S=10, K=4, r=3, eps=0.1, seed=2)
    assert np.allclose(m.nu[:3], 1 / 3) and np.all(m.nu[3:] == 0)
    assert m.g.tolist() == [0, 1, 2, 2, 2, 2, 2, 2, 2, 2]
    # exactly one optimal arm per block at gap exactly eps
    for b in range(3):
        row = np.sort(m.mu[b])[::-1]
        assert row[0] - row[1] == pytest.approx(0.1)
        assert np.all(row[1:] == 0.5)


def test_hard_invalid_case():
    with pytest.raises(ValidationError):
        build_hard_instance(4, S=4, K=2, r=2, eps=0.1)


# -- low-rank instances -------------------------------------------------------


def test_lowrank_rank1_nonneg_shared_argmax():
    m = build_lowrank_instance(S=20, K=6, r=1, B=1.0, seed=0, nonneg=True)
    arg = np.argmax(m.A, axis=1)
    assert len(set(arg.tolist())) == 1


def test_lowrank_zero_bound():
    m = build_lowrank_instance(S=5, K=3, r=2, B=0.0, seed=1)
    assert np.all(m.A == 0)


def test_lowrank_numerical_rank():
    m = build_lowrank_instance(S=20, K=10, r=2, B=1.0, seed=3)
    sv = np.linalg.svd(m.A, compute_uv=False)
    assert np.sum(sv > 1e-8) == 2


def test_lowrank_rewards_in_unit_interval():
    for seed in range(5):
        for nonneg in (True, False):
            m = build_lowrank_instance(S=15, K=8, r=3, B=2.0, seed=seed,
                                       nonneg=nonneg)
            assert m.A.min() >= -1e-12 and m.A.max() <= 1 + 1e-12
            assert np.max(np.abs(m.U)) <= m.B + 1e-9


# -- serialization ------------------------------------------------------------


def test_model_json_roundtrip(tmp_path):
    m = build_lumpable_instance(9, 4, 2, nu={"power-law": 1.2}, seed=13)
    doc = json.loads(json.dumps(model_to_json(m)))
    m2 = model_from_json(doc)
    assert np.array_equal(m2.A, m.A) and np.array_equal(m2.nu, m.nu)
    lr = build_lowrank_instance(6, 4, 2, B=1.5, seed=14)
    lr2 = model_from_json(json.loads(json.dumps(model_to_json(lr))))
    assert np.allclose(lr2.A, lr.A)


def test_build_from_spec_kinds():
    m = build_from_spec({"kind": "lumpable", "S": 6, "K": 3, "r": 2, "seed": 1})
    assert (m.S, m.K, m.r) == (6, 3, 2)
    h = build_from_spec({"kind": "hard", "case": 2, "S": 6, "K": 3, "r": 2,
                         "eps": 0.1})
    assert h.noise == BERNOULLI
    lr = build_from_spec({"kind": "lowrank", "S": 6, "K": 3, "r": 2, "B": 1.0})
    assert lr.r == 2
    with pytest.raises(ConfigurationError):
        build_from_spec({"kind": "mystery"})
