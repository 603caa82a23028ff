"""PAC learners for context-lumpable bandits.

`pac_uniform` handles (almost-)uniform context distributions in three stages:
exponential-schedule data collection, screening of optimal-arm candidates, and
solving the bandit restricted to the candidate set.  `pac_general` handles
arbitrary context distributions by bucketing contexts into dyadic mass classes
and running `pac_uniform` on each bucket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collect import collect, estimate_context_distribution
from .env import ConfigurationError, Policy, ValidationError


class BudgetExhausted(RuntimeError):
    """Raised by a budgeted environment wrapper when its step budget runs out."""


@dataclass(frozen=True)
class PacConfig:
    """Target accuracy eps, failure probability delta, block-count bound r.

    `scale` multiplies every sample budget (never a decision threshold) and is
    reported in results; `max_steps` is a hard cap that aborts the run with a
    partial, invalid-flagged result.
    """

    eps: float
    delta: float
    r: int
    scale: float = 1.0
    fresh_epoch: bool = True
    max_steps: int | None = None

    def __post_init__(self):
        if not (0 < self.eps <= 0.5):
            raise ConfigurationError("eps must lie in (0, 1/2]")
        if not (0 < self.delta < 1):
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.r < 1:
            raise ConfigurationError("r must be at least 1")
        if self.scale <= 0:
            raise ConfigurationError("scale must be positive")


@dataclass
class CandidateSet:
    """Candidate optimal arms with provenance: which (level, i*, j*) added each."""

    arms: list[int] = field(default_factory=list)
    provenance: list[tuple[int, int, int]] = field(default_factory=list)

    def add(self, n: int, i_star: int, j_star: int) -> None:
        if j_star not in self.arms:
            self.arms.append(j_star)
        self.provenance.append((n, i_star, j_star))


@dataclass
class PacResult:
    policy: Policy
    total_steps: int
    breakdown: dict[str, int]
    candidates: CandidateSet
    valid: bool = True
    scale: float = 1.0


def pac_sample_bound(S: int, K: int, r: int, eps: float, delta: float) -> float:
    """Worst-case total-sample bound for the uniform-context PAC learner."""
    return (524.0 * math.log(r * S * K / delta)
            * (1.0 + 2.0 * math.log2(1.0 / eps)) ** 2 * r * (S + K) / eps ** 2)


def pac_gap_bound(S: int, K: int, r: int, eps: float, delta: float) -> float:
    """High-probability policy-gap guarantee of the uniform-context learner."""
    return 2.0 * (10.0 * math.sqrt(math.log(r * S * K / delta)) + 1.0) * eps


def pac_general_gap_bound(S: int, K: int, r: int, eps: float, delta: float) -> float:
    """High-probability gap guarantee of the general-context learner."""
    C = 2.0 * math.sqrt(2.0) * (10.0 * math.sqrt(math.log(r * S * K / delta)) + 1.0)
    L = math.ceil(math.log2(S / eps))
    return C * math.sqrt(max(L, 1)) * eps


class FilteredEnv:
    """Budgeted view of an environment restricted to a context subset.

    Arrivals outside `allowed` are answered immediately with `default_arm` and
    hidden from the caller; every real environment step (hidden or not) counts
    against `budget`.  `.t` mirrors the base environment's total step counter.
    """

    def __init__(self, base, allowed, budget: int, default_arm: int = 0):
        self.base = base
        mask = np.zeros(base.S, dtype=bool)
        mask[np.asarray(allowed, dtype=np.int64)] = True
        self.mask = mask
        self.budget = int(budget)
        self.default_arm = int(default_arm)
        self.start_t = base.t
        self._owed = 0  # sampled-but-unpulled in-subset arrivals

    @property
    def S(self) -> int:
        return self.base.S

    @property
    def K(self) -> int:
        return self.base.K

    @property
    def t(self) -> int:
        return self.base.t

    def _remaining(self) -> int:
        return self.budget - (self.base.t - self.start_t) - self._owed

    def sample_contexts(self, L: int) -> np.ndarray:
        got: list[np.ndarray] = []
        need = int(L)
        while need > 0:
            afford = self._remaining()
            if afford <= 0:
                raise BudgetExhausted(
                    f"step budget {self.budget} exhausted with {need} arrivals pending")
            m = min(max(4 * need, 64), afford)
            ctx = self.base.sample_contexts(m)
            inside = self.mask[ctx]
            out = ctx[~inside]
            if out.size:
                self.base.pull_many(out, np.full(out.size, self.default_arm,
                                                 dtype=np.int64))
            keep = ctx[inside][:need]
            extra = int(inside.sum()) - keep.size
            if extra > 0:
                # Surplus in-subset arrivals are answered with the default arm
                # too; budgets stay exact and nothing leaks to the caller.
                surplus = ctx[inside][need:]
                self.base.pull_many(surplus, np.full(surplus.size, self.default_arm,
                                                     dtype=np.int64))
            if keep.size:
                got.append(keep)
                self._owed += keep.size
                need -= keep.size
        return np.concatenate(got) if got else np.empty(0, dtype=np.int64)

    def pull_many(self, ctx: np.ndarray, arms: np.ndarray) -> np.ndarray:
        y = self.base.pull_many(ctx, arms)
        self._owed -= len(np.atleast_1d(ctx))
        return y


def _arg_best_pair(pairs: dict[tuple[int, int], float]) -> tuple[int, int]:
    # Highest estimate; ties broken by smallest context, then smallest arm.
    return max(pairs, key=lambda ij: (pairs[ij], -ij[0], -ij[1]))


def solve_restricted(env, W, eps: float, delta: float, contexts=None,
                     scale: float = 1.0) -> Policy:
    """Learn per-context best arms within candidate set W by round-robin pulls.

    Each arriving context plays its least-pulled arm of W; the returned policy
    picks the empirical argmax (ties to the smallest arm).  Contexts never seen
    map to the smallest arm in W.
    """
    W = sorted(int(j) for j in set(W))
    if not W:
        raise ValidationError("candidate set W must be nonempty")
    S_all, K = env.S, env.K
    if contexts is None:
        contexts = np.arange(S_all)
    S_eff = len(contexts)
    budget = math.ceil(scale * (4.0 * S_eff * len(W) / eps ** 2)
                       * math.log(S_eff * K / delta))
    actions = np.full(S_all, W[0], dtype=np.int64)
    if len(W) == 1:
        # Nothing to compare; no extra samples needed.
        return Policy(actions)
    Warr = np.asarray(W, dtype=np.int64)
    sums = np.zeros((S_all, len(W)))
    counts = np.zeros((S_all, len(W)), dtype=np.int64)
    ctx = env.sample_contexts(budget)
    order = np.argsort(ctx, kind="stable")
    ctx_sorted = ctx[order]
    uniq, starts, m = np.unique(ctx_sorted, return_index=True, return_counts=True)
    slot = np.empty(budget, dtype=np.int64)
    for idx in range(len(uniq)):
        lo = int(starts[idx])
        # Least-pulled routing with smallest-index ties is exactly round-robin.
        slot[lo:lo + m[idx]] = np.arange(m[idx]) % len(W)
    rewards = env.pull_many(ctx_sorted, Warr[slot])
    np.add.at(sums, (ctx_sorted, slot), rewards)
    np.add.at(counts, (ctx_sorted, slot), 1)
    seen = counts.sum(axis=1) > 0
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), -np.inf)
    # W is sorted ascending, so the first argmax is the smallest tied arm.
    actions[seen] = Warr[np.argmax(means[seen], axis=1)]
    return Policy(actions)


def pac_uniform(env, cfg: PacConfig, rng=None, contexts=None) -> PacResult:
    """PAC learner for (almost-)uniform context distributions.

    When `contexts` is given, the learner targets only that subset (the
    environment is expected to deliver arrivals from it) and all internal
    budgets use its size in place of S.
    """
    if rng is None:
        rng = np.random.default_rng()
    K, r = env.K, cfg.r
    if contexts is None:
        contexts = np.arange(env.S)
    contexts = np.asarray(contexts, dtype=np.int64)
    S_eff = len(contexts)
    if S_eff == 0:
        raise ValidationError("context subset must be nonempty")

    iota = 16.0 * math.log(r * S_eff * K / cfg.delta)
    N = max(1, math.ceil(math.log2(1.0 / cfg.eps ** 2)))
    L = math.ceil(cfg.scale * r * (S_eff + K) * iota / cfg.eps ** 2)
    t0 = env.t
    breakdown = {"collect": 0, "screen": 0, "solve": 0}
    cand = CandidateSet()
    valid = True

    def steps_left() -> int | None:
        if cfg.max_steps is None:
            return None
        return cfg.max_steps - (env.t - t0)

    def capped(budget: int) -> tuple[int, bool]:
        rem = steps_left()
        if rem is None or budget <= rem:
            return budget, False
        return max(rem, 0), True

    datasets: dict[int, dict[tuple[int, int], float]] = {}
    truncated = False
    try:
        for n in range(1, N + 1):
            Ln, cut = capped(L)
            before = env.t
            out = collect(env, Ln, n, ks=None, rng=rng, fresh_epoch=cfg.fresh_epoch)
            breakdown["collect"] += env.t - before
            datasets[n] = dict(out.pairs)
            if cut:
                truncated = True
                break

        if not truncated:
            for n in range(1, N + 1):
                D_n = datasets[n]
                thresh = math.sqrt(iota / 2 ** n)
                while D_n:
                    i_star, j_star = _arg_best_pair(D_n)
                    a_star = D_n[(i_star, j_star)]
                    cand.add(n, i_star, j_star)
                    L_probe = math.ceil(cfg.scale * 8.0 * iota * 2 ** n * S_eff)
                    L_probe, cut = capped(L_probe)
                    ks = {int(i): np.array([j_star]) for i in contexts}
                    before = env.t
                    probe = collect(env, L_probe, n, ks=ks, rng=rng,
                                    fresh_epoch=cfg.fresh_epoch)
                    breakdown["screen"] += env.t - before
                    if cut:
                        truncated = True
                        break
                    # Peel off pairs whose context is certified close to the
                    # leader on arm j*; missing probes conservatively stay.
                    D_n = {(i, j): v for (i, j), v in D_n.items()
                           if (i, j_star) not in probe.pairs
                           or abs(probe.pairs[(i, j_star)] - a_star) >= thresh}
                if truncated:
                    break

        if not truncated:
            W = cand.arms if cand.arms else [0]
            before = env.t
            policy = solve_restricted(env, W, cfg.eps, cfg.delta,
                                      contexts=contexts, scale=cfg.scale)
            breakdown["solve"] += env.t - before
        else:
            valid = False
            W = cand.arms if cand.arms else [0]
            policy = Policy(np.full(env.S, min(W), dtype=np.int64))
    except BudgetExhausted:
        valid = False
        W = cand.arms if cand.arms else [0]
        policy = Policy(np.full(env.S, min(W), dtype=np.int64))

    return PacResult(policy=policy, total_steps=env.t - t0, breakdown=breakdown,
                     candidates=cand, valid=valid, scale=cfg.scale)


def bucket_of(nu_hat: np.ndarray, n_buckets: int) -> np.ndarray:
    """Dyadic mass bucket per context: l with nu in (2^-l-1, 2^-l]; tail = n_buckets."""
    lab = np.full(nu_hat.shape, n_buckets, dtype=np.int64)
    pos = nu_hat > 0
    with np.errstate(divide="ignore"):
        lab[pos] = np.floor(-np.log2(nu_hat[pos])).astype(np.int64)
    return np.minimum(lab, n_buckets)


def pac_general(env, cfg: PacConfig, rng=None) -> PacResult:
    """PAC learner for arbitrary context distributions via dyadic mass buckets."""
    if rng is None:
        rng = np.random.default_rng()
    S, K = env.S, env.K
    J = math.ceil(cfg.scale * (4.0 * S / cfg.eps) * math.log(S / cfg.delta))
    n_buckets = max(1, math.ceil(math.log2(S / cfg.eps)))
    N = math.ceil(cfg.scale * pac_sample_bound(S, K, cfg.r, cfg.eps, cfg.delta))

    t0 = env.t
    nu_hat = estimate_context_distribution(env, J)
    breakdown = {"estimate": env.t - t0, "collect": 0, "screen": 0, "solve": 0}
    labels = bucket_of(nu_hat, n_buckets)

    actions = np.zeros(S, dtype=np.int64)  # tail bucket plays arm 0
    cand = CandidateSet()
    valid = True
    sub_cfg = PacConfig(eps=cfg.eps, delta=cfg.delta, r=cfg.r, scale=cfg.scale,
                        fresh_epoch=cfg.fresh_epoch, max_steps=N)
    for l in range(n_buckets):
        members = np.flatnonzero(labels == l)
        if members.size == 0:
            continue
        fenv = FilteredEnv(env, members, budget=N, default_arm=0)
        sub = pac_uniform(fenv, sub_cfg, rng=rng, contexts=members)
        actions[members] = sub.policy.actions[members]
        for stage in ("collect", "screen", "solve"):
            breakdown[stage] += sub.breakdown[stage]
        cand.arms.extend(j for j in sub.candidates.arms if j not in cand.arms)
        cand.provenance.extend(sub.candidates.provenance)
        valid = valid and sub.valid
    # Discarded out-of-bucket arrivals are part of total_steps but belong to no
    # stage; report them separately so the breakdown still sums to the total.
    total = env.t - t0
    breakdown["discard"] = total - sum(breakdown.values())
    return PacResult(policy=Policy(actions), total_steps=total, breakdown=breakdown,
                     candidates=cand, valid=valid, scale=cfg.scale)
