"""Reference learners: the naive per-pair PAC sweep, independent per-context
UCB1, and exponential weights over arms shared across contexts.

These set the SK/eps^2 and sqrt(SKT)-style rates the structured algorithms are
benchmarked against; they use the same environment protocol and produce the
same result records.
"""
from __future__ import annotations

import math

import numpy as np

from .env import Policy, ValidationError
from .pac import CandidateSet, PacResult
from .regret import RunTrace


def naive_pair_budget(S: int, K: int, eps: float, delta: float) -> int:
    """Per-(context, arm) sample count of the naive PAC sweep."""
    return math.ceil((2.0 / eps ** 2) * math.log(2.0 * S * K / delta))


def pac_naive(env, eps: float, delta: float, max_steps: int | None = None) -> PacResult:
    """Try every arm on every context ~(2/eps^2)ln(2SK/delta) times.

    Arrivals route round-robin over arms (least-pulled); once a context has
    completed its sweep, further arrivals play its current empirical best.
    Stops when every context finished (zero-mass contexts simply never arrive);
    `max_steps` (default 50x the ideal total) guards against starvation.
    """
    S, K = env.S, env.K
    m = naive_pair_budget(S, K, eps, delta)
    need = K * m  # arrivals per context to finish its sweep
    if max_steps is None:
        max_steps = 50 * S * need
    t0 = env.t
    arrivals = np.zeros(S, dtype=np.int64)
    sums = np.zeros((S, K))
    counts = np.zeros((S, K), dtype=np.int64)
    valid = True
    chunk = max(1024, S * K)
    while True:
        seen = arrivals > 0
        if np.all(arrivals[seen] >= need) and np.all(seen):
            break
        if env.t - t0 >= max_steps:
            valid = False
            break
        L = min(chunk, max_steps - (env.t - t0))
        ctx = env.sample_contexts(L)
        order = np.argsort(ctx, kind="stable")
        ctx_s = ctx[order]
        uniq, starts, cnt = np.unique(ctx_s, return_index=True, return_counts=True)
        arms = np.empty(L, dtype=np.int64)
        with np.errstate(invalid="ignore"):
            best_now = np.where(counts.sum(axis=1) > 0,
                                np.argmax(np.where(counts > 0,
                                                   sums / np.maximum(counts, 1),
                                                   -np.inf), axis=1), 0)
        for idx in range(len(uniq)):
            i = int(uniq[idx])
            lo = int(starts[idx])
            k = np.arange(arrivals[i], arrivals[i] + cnt[idx])
            a = np.where(k < need, k % K, best_now[i])
            arms[lo:lo + cnt[idx]] = a
            arrivals[i] += cnt[idx]
        y = env.pull_many(ctx_s, arms)
        np.add.at(sums, (ctx_s, arms), y)
        np.add.at(counts, (ctx_s, arms), 1)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), -np.inf)
    actions = np.where(counts.sum(axis=1) > 0, np.argmax(means, axis=1), 0)
    steps = env.t - t0
    return PacResult(policy=Policy(actions), total_steps=steps,
                     breakdown={"solve": steps}, candidates=CandidateSet(),
                     valid=valid, scale=1.0)


def regret_ucb_per_context(env, T: int) -> RunTrace:
    """Independent UCB1 per context with bonus sqrt(2 ln t_i / pulls)."""
    if T < 1:
        raise ValidationError("T must be at least 1")
    S, K = env.S, env.K
    sums = np.zeros((S, K))
    counts = np.zeros((S, K), dtype=np.int64)
    t_ctx = np.zeros(S, dtype=np.int64)
    trace = RunTrace()
    t0, reg0 = env.t, env.total_regret
    for _ in range(int(T)):
        i = env.sample_context()
        t_ctx[i] += 1
        row = counts[i]
        if t_ctx[i] <= K:
            j = int(t_ctx[i] - 1)  # play each arm once first
        else:
            idx = sums[i] / row + np.sqrt(2.0 * math.log(t_ctx[i]) / row)
            j = int(np.argmax(idx))
        y = env.pull(i, j)
        sums[i, j] += y
        counts[i, j] += 1
    trace.steps = env.t - t0
    trace.regret = env.total_regret - reg0
    return trace


def exp3_constant_experts(env, T: int, eta: float | None = None) -> RunTrace:
    """Exponential weights over arms shared across contexts (constant experts).

    Uses learning rate sqrt(ln K / (T K)) and importance-weighted loss updates;
    rewards outside [0, 1] are clipped and flagged in the trace.
    """
    if T < 1:
        raise ValidationError("T must be at least 1")
    K = env.K
    if eta is None:
        eta = math.sqrt(math.log(max(K, 2)) / (T * K))
    logw = np.zeros(K)
    trace = RunTrace()
    t0, reg0 = env.t, env.total_regret
    rng = np.random.default_rng(np.random.SeedSequence([env.seed, 0xE3]))
    clipped = 0
    for _ in range(int(T)):
        i = env.sample_context()
        w = np.exp(logw - logw.max())
        p = w / w.sum()
        j = int(rng.choice(K, p=p))
        y = env.pull(i, j)
        if y < 0.0 or y > 1.0:
            y = min(max(y, 0.0), 1.0)
            clipped += 1
        loss_hat = (1.0 - y) / p[j]
        logw[j] -= eta * loss_hat
    if clipped:
        trace.flags.append(f"rewards-clipped:{clipped}")
    trace.steps = env.t - t0
    trace.regret = env.total_regret - reg0
    return trace
