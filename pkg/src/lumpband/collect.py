"""Level-n data collection: epoch-based uniform probing over per-context arm sets.

`collect` runs the environment for exactly L steps.  Each context keeps a current
probe arm drawn uniformly from its allowed set; after every 2^n arrivals of that
context the (context, arm) pair is emitted with its reward estimate and the probe
arm is redrawn.  Later emissions for the same pair overwrite earlier ones.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .env import ValidationError


@dataclass
class CollectOutput:
    """Result of one collection pass at level `n`.

    pairs maps (context, arm) to a reward estimate; counts holds the number of
    samples behind each estimate; visits counts arrivals per context.
    """

    level: int
    steps: int
    pairs: dict[tuple[int, int], float] = field(default_factory=dict)
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    visits: np.ndarray | None = None

    def merged_with(self, other: "CollectOutput") -> "CollectOutput":
        """Combine two passes at the same level (the newer pass overwrites)."""
        if other.level != self.level:
            raise ValidationError("cannot merge collection outputs from different levels")
        out = CollectOutput(level=self.level, steps=self.steps + other.steps,
                            pairs=dict(self.pairs), counts=dict(self.counts))
        out.pairs.update(other.pairs)
        out.counts.update(other.counts)
        if self.visits is not None and other.visits is not None:
            out.visits = self.visits + other.visits
        return out


def _arm_set(ks, i: int, K: int) -> np.ndarray:
    if ks is None or i not in ks:
        return np.arange(K)
    arr = np.asarray(ks[i], dtype=np.int64)
    if arr.size == 0:
        raise ValidationError(f"empty arm set for context {i}")
    return arr


def collect(env, L: int, n: int, ks=None, rng=None, fresh_epoch: bool = True) -> CollectOutput:
    """Run `env` for exactly L steps at epoch level n (epoch length 2^n).

    ks maps context -> allowed arm array; omitted contexts use all K arms.
    With fresh_epoch=True the estimate for an emitted pair is the mean of the
    2^n rewards from its own epoch; otherwise it is the running mean of all
    rewards seen for that context within this call.
    """
    if L < 0:
        raise ValidationError("L must be nonnegative")
    if n < 0:
        raise ValidationError("level n must be nonnegative")
    if rng is None:
        rng = np.random.default_rng()
    S, K = env.S, env.K
    epoch = 1 << n
    out = CollectOutput(level=n, steps=int(L), visits=np.zeros(S, dtype=np.int64))
    if L == 0:
        return out

    ctx = env.sample_contexts(int(L))
    order = np.argsort(ctx, kind="stable")
    ctx_sorted = ctx[order]
    uniq, starts, m = np.unique(ctx_sorted, return_index=True, return_counts=True)
    out.visits[uniq] = m

    # Probe arms: one draw per epoch (including a trailing partial epoch), in
    # context order so the algorithm RNG stream is independent of grouping.
    arms_sorted = np.empty(L, dtype=np.int64)
    psi_per_ctx: list[np.ndarray] = []
    for idx, i in enumerate(uniq):
        n_eps = -(-int(m[idx]) // epoch)
        allowed = _arm_set(ks, int(i), K)
        if allowed.size == 1:
            psi = np.full(n_eps, allowed[0], dtype=np.int64)
        else:
            psi = allowed[rng.integers(0, allowed.size, n_eps)]
        psi_per_ctx.append(psi)
        lo = int(starts[idx])
        arms_sorted[lo:lo + m[idx]] = np.repeat(psi, epoch)[: m[idx]]

    rewards = env.pull_many(ctx_sorted, arms_sorted)

    for idx, i in enumerate(uniq):
        lo = int(starts[idx])
        mi = int(m[idx])
        q = mi // epoch  # complete epochs
        if q == 0:
            continue
        block = rewards[lo:lo + q * epoch]
        if fresh_epoch:
            ests = block.reshape(q, epoch).mean(axis=1)
            cnts = np.full(q, epoch)
        else:
            csum = np.cumsum(block)
            ends = np.arange(1, q + 1) * epoch
            ests = csum[ends - 1] / ends
            cnts = ends
        psi = psi_per_ctx[idx]
        for e in range(q):
            key = (int(i), int(psi[e]))
            out.pairs[key] = float(ests[e])
            out.counts[key] = int(cnts[e])
    return out


def estimate_context_distribution(env, J: int) -> np.ndarray:
    """Estimate the context distribution from J arrivals (playing arm 0)."""
    if J <= 0:
        raise ValidationError("J must be positive")
    ctx = env.sample_contexts(int(J))
    env.pull_many(ctx, np.zeros(int(J), dtype=np.int64))
    return np.bincount(ctx, minlength=env.S) / float(J)


# -- serialization ----------------------------------------------------------


def collect_output_to_json(out: CollectOutput) -> dict:
    return {
        "level": out.level,
        "steps": out.steps,
        "pairs": {f"{i},{j}": v for (i, j), v in out.pairs.items()},
        "counts": {f"{i},{j}": c for (i, j), c in out.counts.items()},
        "visits": None if out.visits is None else out.visits.tolist(),
    }


def collect_output_from_json(doc: dict) -> CollectOutput:
    def parse(d):
        return {tuple(int(x) for x in k.split(",")): v for k, v in d.items()}

    visits = doc.get("visits")
    return CollectOutput(
        level=int(doc["level"]),
        steps=int(doc["steps"]),
        pairs=parse(doc.get("pairs", {})),
        counts={k: int(v) for k, v in parse(doc.get("counts", {})).items()},
        visits=None if visits is None else np.asarray(visits, dtype=np.int64),
    )
