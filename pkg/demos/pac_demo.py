"""Walk-through of PAC policy identification on a lumpable instance.

Builds a 40-context / 20-arm instance with 2 blocks, runs the structured
learner next to the naive per-pair sweep, and prints the sample counts and
the exact policy gaps side by side.
"""
import numpy as np

from lumpband.baselines import pac_naive
from lumpband.env import EnvHandle, build_lumpable_instance, exact_policy_gap
from lumpband.pac import PacConfig, pac_gap_bound, pac_uniform

S, K, r = 40, 20, 2
EPS, DELTA = 0.2, 0.1

model = build_lumpable_instance(S, K, r, seed=1)
print(f"instance: S={S} K={K} r={r}, best arm per block:",
      model.mu.argmax(axis=1))

cfg = PacConfig(eps=EPS, delta=DELTA, r=r, scale=0.05)
bound = pac_gap_bound(S, K, r, EPS, DELTA)

for seed in range(3):
    env = EnvHandle(model, seed=seed)
    res = pac_uniform(env, cfg, rng=np.random.default_rng(seed))
    gap = exact_policy_gap(model, res.policy)

    env2 = EnvHandle(model, seed=100 + seed)
    naive = pac_naive(env2, EPS, DELTA)
    naive_gap = exact_policy_gap(model, naive.policy)

    print(f"seed {seed}: structured {res.total_steps:>9,} steps, gap {gap:.4f}"
          f" | naive {naive.total_steps:>9,} steps, gap {naive_gap:.4f}"
          f" | gap bound {bound:.3f}")

print("\nstructured learner reuses one estimate per (block, arm) instead of")
print("one per (context, arm); the step counts above show the saving.")
