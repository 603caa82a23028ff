"""Phased elimination versus per-context UCB on a two-block instance.

Both learners see the same Bernoulli environment.  The phased learner spends
its early budget discovering the block structure, then plays near-optimally
forever; UCB has to relearn each of the 60 contexts from scratch and keeps
paying for exploration.  We print cumulative pseudo-regret at a few
checkpoints and the recovered partition.
"""
import numpy as np

from lumpband.baselines import regret_ucb_per_context
from lumpband.env import BERNOULLI, EnvHandle, RewardModel
from lumpband.regret import run_regret_uniform

S, K, r = 60, 30, 2
T = 400_000
CHECKPOINTS = [50_000, 100_000, 200_000, 400_000]

mu = np.full((r, K), 0.03)
mu[0, 2] = 0.97
mu[1, 7] = 0.97
model = RewardModel(mu=mu, g=np.repeat(np.arange(r), S // r),
                    nu=np.full(S, 1 / S), noise=BERNOULLI)


def curve(env):
    cum = np.cumsum(env.gap_history())
    return [cum[t - 1] for t in CHECKPOINTS]


env = EnvHandle(model, seed=0)
env.record_gaps = True
trace = run_regret_uniform(env, r, max_steps=T,
                           rng=np.random.default_rng(0), scale=0.002)
print("phased elimination regret:", [f"{v:,.0f}" for v in curve(env)])
sizes = [len(C) for C in trace.phases[-1]["partition"]]
print(f"  recovered {len(sizes)} clusters of sizes {sizes}, "
      f"surviving arms {trace.phases[-1]['good']}")

env = EnvHandle(model, seed=0)
env.record_gaps = True
regret_ucb_per_context(env, T)
print("per-context UCB regret:   ", [f"{v:,.0f}" for v in curve(env)])
print("\nthe phased curve goes flat once the partition is found; UCB keeps")
print("accruing regret on every context separately.")
