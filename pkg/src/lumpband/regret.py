"""Phased-elimination regret minimizers with online clustering.

`run_regret_uniform` targets uniform context and block distributions; it
alternates data collection, gap-triggered cluster splitting (`split_cluster`),
and arm elimination at geometrically shrinking error scales.
`run_regret_nonuniform` extends this with per-phase accuracy levels so that
small blocks are still explored cheaply.  `run_regret_general` wraps the latter
with a context-distribution estimate and dyadic mass buckets.

All schedules accept a `scale` multiplier on the confidence parameter iota_h;
it shrinks sample budgets and decision thresholds together so desk-scale runs
actually reach the elimination regime.  `iota_override` (a callable h -> iota)
replaces the schedule entirely, which lets tests run the two algorithms with
matched thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collect import CollectOutput, collect, estimate_context_distribution
from .env import ValidationError


@dataclass(frozen=True)
class PhaseSchedule:
    """Per-phase constants for the elimination algorithms."""

    h: int
    eps_h: float
    delta_h: float
    iota_h: float
    tilde_eps_h: float
    n_h: int
    N_h: int


def uniform_schedule(h: int, S: int, K: int, r: int, scale: float = 1.0,
                     iota_override=None) -> PhaseSchedule:
    eps_h = 2.0 ** (-h / 2.0)
    delta_h = eps_h ** 2 / (r ** 3 * S * K)
    if iota_override is not None:
        iota_h = float(iota_override(h))
    else:
        iota_h = scale * 64.0 * math.log(r * S * K / delta_h)
    return PhaseSchedule(h=h, eps_h=eps_h, delta_h=delta_h, iota_h=iota_h,
                         tilde_eps_h=math.sqrt(iota_h) * eps_h, n_h=h, N_h=h)


def nonuniform_schedule(h: int, S: int, K: int, r: int, scale: float = 1.0,
                        iota_override=None) -> PhaseSchedule:
    eps_h = 2.0 ** (-h / 2.0)
    N_h = h
    delta_h = eps_h ** 2 / (r ** 3 * S * K)
    if iota_override is not None:
        iota_h = float(iota_override(h))
    else:
        iota_h = scale * 128.0 * math.log(r * S * K * N_h / delta_h)
    return PhaseSchedule(h=h, eps_h=eps_h, delta_h=delta_h, iota_h=iota_h,
                         tilde_eps_h=math.sqrt(iota_h) * eps_h, n_h=h, N_h=N_h)


@dataclass
class ClusterState:
    """Partition of the context set with per-cluster candidate arm sets.

    `good[c]` is a set of arms for the uniform algorithm, or a dict
    level -> set for the non-uniform one (levels computed so far; lookups
    beyond the deepest computed level fall back to the deepest).
    """

    partition: list[tuple[int, ...]]
    good: list
    h: int = 1

    def cluster_of(self, i: int) -> int:
        for c, C in enumerate(self.partition):
            if i in C:
                return c
        raise ValidationError(f"context {i} not in partition")

    def level_set(self, c: int, n: int) -> set[int]:
        gd = self.good[c]
        if isinstance(gd, dict):
            return gd[min(n, max(gd))]
        return gd


@dataclass
class RunTrace:
    """Per-phase log of an elimination run."""

    steps: int = 0
    regret: float = 0.0
    events: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    phases: list[dict] = field(default_factory=list)
    final_state: ClusterState | None = None
    truncated: bool = False


def _sorted_partition(parts) -> list[tuple[int, ...]]:
    return sorted((tuple(sorted(p)) for p in parts), key=lambda p: p[0])


def _estimate_matrix(S: int, K: int, pairs: dict[tuple[int, int], float]) -> np.ndarray:
    E = np.full((S, K), np.nan)
    for (i, j), v in pairs.items():
        E[i, j] = v
    return E


def split_points(sorted_estimates: np.ndarray, threshold: float) -> list[int]:
    """Cut positions k where estimate[k-1] - estimate[k] >= threshold."""
    drops = sorted_estimates[:-1] - sorted_estimates[1:]
    return [int(k) + 1 for k in np.flatnonzero(drops >= threshold)]


def _cut_cluster(C, ests: dict[int, float], threshold: float):
    """Split cluster C by descending estimate; unestimated contexts go last.

    Returns (parts, missing) where parts is the ordered list of tuples.
    """
    have = [i for i in C if i in ests]
    missing = [i for i in C if i not in ests]
    # Descending estimate; ties keep ascending context order.
    have.sort(key=lambda i: (-ests[i], i))
    vals = np.array([ests[i] for i in have])
    cuts = split_points(vals, threshold) if len(have) > 1 else []
    parts: list[list[int]] = []
    prev = 0
    for k in cuts + [len(have)]:
        parts.append(have[prev:k])
        prev = k
    if not parts:
        parts = [[]]
    parts[-1].extend(missing)
    parts = [p for p in parts if p]
    return [tuple(sorted(p)) for p in parts], missing


def _split_level(eps_p: float, L_p: int, S: int) -> int:
    """Epoch level for a split pass: 2^n' ~ 2/eps'^2, capped so every context
    can still complete an epoch within the (possibly scaled-down) budget."""
    n_p = max(1, math.ceil(math.log2(2.0 / eps_p ** 2)))
    cap = max(1, int(math.floor(math.log2(max(L_p / (2.0 * S), 2.0)))))
    return min(n_p, cap)


@dataclass
class SplitResult:
    parts: list[tuple[int, ...]]
    missing: list[int]
    steps: int
    estimates: dict[int, float]


def split_cluster(env, eps_p: float, delta_p: float, ks, C, j: int, rng=None,
                  scale: float = 1.0, fresh_epoch: bool = True,
                  max_steps: int | None = None) -> SplitResult:
    """Separate cluster C along arm j by sorted empirical means.

    Plays arm j on every context of C (other contexts keep their `ks` sets),
    sorts C by the resulting estimates, and cuts whenever two consecutive
    estimates drop by at least sqrt(iota') * eps'.
    """
    if not len(C):
        raise ValidationError("cannot split an empty cluster")
    if rng is None:
        rng = np.random.default_rng()
    S = env.S
    iota_p = scale * 64.0 * math.log(S / delta_p)
    L_p = math.ceil(S * iota_p / eps_p ** 2)
    n_p = _split_level(eps_p, L_p, S)
    if max_steps is not None:
        L_p = min(L_p, max_steps)
    ks_full = dict(ks) if ks else {}
    for i in C:
        ks_full[int(i)] = np.array([j])
    before = env.t
    out = collect(env, L_p, n_p, ks=ks_full, rng=rng, fresh_epoch=fresh_epoch)
    ests = {i: v for (i, jj), v in out.pairs.items() if jj == j and i in set(C)}
    threshold = math.sqrt(iota_p) * eps_p
    parts, missing = _cut_cluster(C, ests, threshold)
    return SplitResult(parts=parts, missing=missing, steps=env.t - before,
                       estimates=ests)


def _find_witness_uniform(state: ClusterState, E: np.ndarray, tilde_eps: float,
                          attempted: set):
    for c, C in enumerate(state.partition):
        if len(C) < 2:
            continue
        Carr = np.asarray(C)
        sub = E[Carr]
        for j in sorted(state.good[c]):
            if (C, j) in attempted:
                continue
            col = sub[:, j]
            m = ~np.isnan(col)
            if m.sum() < 2:
                continue
            vmax = np.nanmax(col)
            vmin = np.nanmin(col)
            if vmax - vmin >= tilde_eps:
                i_hi = int(Carr[np.nanargmax(col)])
                i_lo = int(Carr[np.nanargmin(col)])
                return c, j, i_hi, i_lo
    return None


def _eliminate(C, good_arms: set[int], E: np.ndarray, threshold: float,
               flags: list[str]):
    """Drop arms whose empirical block optimum trails the best by > threshold."""
    Carr = np.asarray(C)
    mu_bar = {}
    for j in sorted(good_arms):
        col = E[Carr, j]
        if np.any(~np.isnan(col)):
            mu_bar[j] = float(np.nanmax(col))
    if not mu_bar:
        return set(good_arms), set()
    best = max(mu_bar.values())
    survivors = {j for j in good_arms
                 if j not in mu_bar or best - mu_bar[j] <= threshold}
    if not survivors:  # defensive: the argmax survives by construction
        survivors = {max(mu_bar, key=mu_bar.get)}
        flags.append("elimination-would-empty")
    return survivors, set(good_arms) - survivors


def _ks_from_state(state: ClusterState, n: int) -> dict[int, np.ndarray]:
    ks = {}
    for c, C in enumerate(state.partition):
        arms = np.array(sorted(state.level_set(c, n)), dtype=np.int64)
        for i in C:
            ks[int(i)] = arms
    return ks


def run_regret_uniform(env, r: int, max_steps: int, rng=None, scale: float = 1.0,
                       iota_override=None, fresh_epoch: bool = True,
                       contexts=None) -> RunTrace:
    """Anytime phased elimination for uniform context and block distributions."""
    if max_steps <= 0:
        raise ValidationError("max_steps must be positive")
    if rng is None:
        rng = np.random.default_rng()
    S_all, K = env.S, env.K
    if contexts is None:
        contexts = list(range(S_all))
    contexts = sorted(int(i) for i in contexts)
    S = len(contexts)
    state = ClusterState(partition=[tuple(contexts)], good=[set(range(K))], h=1)
    trace = RunTrace()
    t0, reg0 = env.t, env.total_regret

    def remaining() -> int:
        return max_steps - (env.t - t0)

    h = 0
    while remaining() > 0:
        h += 1
        state.h = h
        sch = uniform_schedule(h, S, K, r, scale=scale, iota_override=iota_override)
        L_h = math.ceil(r * (S + K) * sch.iota_h / sch.eps_h ** 2)
        ks = _ks_from_state(state, sch.n_h)

        rem = remaining()
        if L_h > rem:
            collect(env, rem, sch.n_h, ks=ks, rng=rng, fresh_epoch=fresh_epoch)
            trace.truncated = True
            break
        out = collect(env, L_h, sch.n_h, ks=ks, rng=rng, fresh_epoch=fresh_epoch)
        E = _estimate_matrix(S_all, K, out.pairs)

        # Step 2: split heterogeneous clusters.
        attempted: set = set()
        truncated = False
        while True:
            w = _find_witness_uniform(state, E, sch.tilde_eps_h, attempted)
            if w is None:
                break
            c, j, i_hi, i_lo = w
            C = state.partition[c]
            eps_p = sch.eps_h / (4.0 * r)
            delta_p = sch.delta_h / r
            ks_other = {i: a for i, a in _ks_from_state(state, sch.n_h).items()
                        if i not in set(C)}
            iota_p = scale * 64.0 * math.log(env.S / delta_p)
            L_p = math.ceil(env.S * iota_p / eps_p ** 2)
            rem = remaining()
            if L_p > rem:
                if rem > 0:
                    ks_burn = dict(ks_other)
                    for i in C:
                        ks_burn[int(i)] = np.array([j])
                    collect(env, rem, sch.n_h, ks=ks_burn, rng=rng,
                            fresh_epoch=fresh_epoch)
                truncated = True
                break
            res = split_cluster(env, eps_p, delta_p, ks_other, C, j, rng=rng,
                                scale=scale, fresh_epoch=fresh_epoch)
            if res.missing:
                trace.flags.append(f"split-missing-estimates:h={h},n={len(res.missing)}")
            if len(res.parts) <= 1:
                attempted.add((C, j))
                continue
            inherited = state.good[c]
            new_parts = list(state.partition)
            new_good = list(state.good)
            del new_parts[c], new_good[c]
            for p in res.parts:
                new_parts.append(p)
                new_good.append(set(inherited))
            order = sorted(range(len(new_parts)), key=lambda k: new_parts[k][0])
            state.partition = [new_parts[k] for k in order]
            state.good = [new_good[k] for k in order]
            trace.events.append({"kind": "split", "phase": h, "arm": j,
                                 "cluster": C, "parts": res.parts,
                                 "witness": (i_hi, i_lo)})
        if truncated:
            trace.truncated = True
            break
        if len(state.partition) > r:
            trace.flags.append(f"partition-exceeds-r:h={h},size={len(state.partition)}")

        # Step 3: eliminate suboptimal arms per cluster.
        for c, C in enumerate(state.partition):
            survivors, dropped = _eliminate(C, state.good[c], E,
                                            2.0 * sch.tilde_eps_h, trace.flags)
            if dropped:
                trace.events.append({"kind": "eliminate", "phase": h,
                                     "cluster": C, "arms": sorted(dropped)})
            state.good[c] = survivors

        trace.phases.append({
            "h": h, "eps_h": sch.eps_h, "iota_h": sch.iota_h, "L_h": L_h,
            "partition": list(state.partition),
            "good": [sorted(g) for g in state.good],
            "steps": env.t - t0, "regret": env.total_regret - reg0,
        })

    trace.steps = env.t - t0
    trace.regret = env.total_regret - reg0
    trace.final_state = state
    return trace


# -- non-uniform block distribution ------------------------------------------


@dataclass(frozen=True)
class CollectRequest:
    L: int
    n: int
    ks: dict[int, np.ndarray]


def _deep_sets(state: ClusterState) -> list[list[int]]:
    return [sorted(state.level_set(c, 10 ** 9)) for c in range(len(state.partition))]


def _nonuniform_program(contexts, S_env: int, K: int, r: int, scale: float,
                        iota_override, trace: RunTrace):
    """Generator form of the non-uniform-block algorithm.

    Yields CollectRequest objects and receives CollectOutput via send(); all
    decision logic lives here so different drivers (vectorized or arrival-routed)
    share one implementation.
    """
    contexts = sorted(int(i) for i in contexts)
    S = len(contexts)
    state = ClusterState(partition=[tuple(contexts)],
                         good=[{1: set(range(K))}], h=1)
    trace.final_state = state
    h = 0
    while True:
        h += 1
        state.h = h
        sch = nonuniform_schedule(h, S, K, r, scale=scale,
                                  iota_override=iota_override)
        E: dict[int, np.ndarray] = {}
        for n in range(1, sch.N_h + 1):
            L_hn = math.ceil(r * (S + K) * sch.iota_h * 2.0 ** ((n + h) / 2.0))
            out = yield CollectRequest(L=L_hn, n=n, ks=_ks_from_state(state, n))
            E[n] = _estimate_matrix(S_env, K, out.pairs)

        # Step 2: level-aware split loop.
        attempted: set = set()
        while True:
            witness = None
            for c, C in enumerate(state.partition):
                if len(C) < 2 or witness is not None:
                    continue
                Carr = np.asarray(C)
                for j in range(K):
                    if witness is not None:
                        break
                    for n in range(1, sch.N_h + 1):
                        if j not in state.level_set(c, n) or (C, j, n) in attempted:
                            continue
                        col = E[n][Carr, j]
                        if np.sum(~np.isnan(col)) < 2:
                            continue
                        if np.nanmax(col) - np.nanmin(col) >= math.sqrt(sch.iota_h / 2 ** n):
                            witness = (c, j, n)
                            break
            if witness is None:
                break
            c, j, n = witness
            C = state.partition[c]
            eps_p = sch.eps_h / (4.0 * r)
            delta_p = sch.delta_h / r
            iota_p = scale * 64.0 * math.log(S_env / delta_p)
            L_p = math.ceil(S_env * iota_p / eps_p ** 2)
            n_p = _split_level(eps_p, L_p, S_env)
            ks = _ks_from_state(state, n)
            for i in C:
                ks[int(i)] = np.array([j])
            out = yield CollectRequest(L=L_p, n=n_p, ks=ks)
            ests = {i: v for (i, jj), v in out.pairs.items()
                    if jj == j and i in set(C)}
            parts, missing = _cut_cluster(C, ests, math.sqrt(iota_p) * eps_p)
            if missing:
                trace.flags.append(f"split-missing-estimates:h={h},n={len(missing)}")
            if len(parts) <= 1:
                attempted.add((C, j, n))
                continue
            inherited = state.good[c]
            new_parts = list(state.partition)
            new_good = list(state.good)
            del new_parts[c], new_good[c]
            for p in parts:
                new_parts.append(p)
                new_good.append({lev: set(a) for lev, a in inherited.items()})
            order = sorted(range(len(new_parts)), key=lambda k: new_parts[k][0])
            state.partition = [new_parts[k] for k in order]
            state.good = [new_good[k] for k in order]
            trace.events.append({"kind": "split", "phase": h, "arm": j,
                                 "level": n, "cluster": C, "parts": parts})
        if len(state.partition) > r:
            trace.flags.append(f"partition-exceeds-r:h={h},size={len(state.partition)}")

        # Step 3: per-level elimination with the inclusion chain.
        new_good: list[dict[int, set[int]]] = []
        for c, C in enumerate(state.partition):
            chain: dict[int, set[int]] = {1: set(range(K))}
            for n in range(2, sch.N_h + 1):
                G_hn, dropped = _eliminate(C, state.level_set(c, n), E[n],
                                           2.0 * math.sqrt(sch.iota_h / 2 ** n),
                                           trace.flags)
                if dropped:
                    trace.events.append({"kind": "eliminate", "phase": h,
                                         "level": n, "cluster": C,
                                         "arms": sorted(dropped)})
                nxt = chain[n - 1] & G_hn
                if not nxt:
                    nxt = set(chain[n - 1])
                    trace.flags.append("inclusion-would-empty")
                chain[n] = nxt
            new_good.append(chain)
        state.good = new_good
        trace.phases.append({
            "h": h, "eps_h": sch.eps_h, "iota_h": sch.iota_h, "N_h": sch.N_h,
            "partition": list(state.partition),
            "good": _deep_sets(state),
        })


def run_regret_nonuniform(env, r: int, max_steps: int, rng=None,
                          scale: float = 1.0, iota_override=None,
                          fresh_epoch: bool = True, contexts=None) -> RunTrace:
    """Anytime phased elimination handling non-uniform block distributions."""
    if max_steps <= 0:
        raise ValidationError("max_steps must be positive")
    if rng is None:
        rng = np.random.default_rng()
    if contexts is None:
        contexts = list(range(env.S))
    trace = RunTrace()
    t0, reg0 = env.t, env.total_regret
    prog = _nonuniform_program(contexts, env.S, env.K, r, scale, iota_override,
                               trace)
    req = next(prog)
    while True:
        rem = max_steps - (env.t - t0)
        if rem <= 0:
            break
        if req.L > rem:
            # Spend the remainder as the pending request would, then stop;
            # partial data is not acted upon.
            collect(env, rem, req.n, ks=req.ks, rng=rng, fresh_epoch=fresh_epoch)
            trace.truncated = True
            break
        out = collect(env, req.L, req.n, ks=req.ks, rng=rng,
                      fresh_epoch=fresh_epoch)
        req = prog.send(out)
    prog.close()
    for ph in trace.phases:
        ph.setdefault("steps", None)
    trace.steps = env.t - t0
    trace.regret = env.total_regret - reg0
    return trace


class IncrementalCollect:
    """Arrival-at-a-time form of the collection pass, for routed execution."""

    def __init__(self, req: CollectRequest, rng, fresh_epoch: bool = True):
        self.req = req
        self.rng = rng
        self.fresh_epoch = fresh_epoch
        self.epoch = 1 << req.n
        self.steps = 0
        self.visits: dict[int, int] = {}
        self.psi: dict[int, int] = {}
        self.esum: dict[int, float] = {}
        self.csum: dict[int, float] = {}
        self.out = CollectOutput(level=req.n, steps=req.L)

    def _draw(self, i: int) -> int:
        arms = self.req.ks.get(i)
        if arms is None or len(arms) == 0:
            raise ValidationError(f"no arm set for context {i}")
        if len(arms) == 1:
            return int(arms[0])
        return int(arms[self.rng.integers(0, len(arms))])

    @property
    def done(self) -> bool:
        return self.steps >= self.req.L

    def serve(self, i: int) -> int:
        if i not in self.psi:
            self.psi[i] = self._draw(i)
        return self.psi[i]

    def observe(self, i: int, j: int, y: float) -> None:
        self.steps += 1
        v = self.visits.get(i, 0) + 1
        self.visits[i] = v
        self.esum[i] = self.esum.get(i, 0.0) + y
        self.csum[i] = self.csum.get(i, 0.0) + y
        if v % self.epoch == 0:
            if self.fresh_epoch:
                est, cnt = self.esum[i] / self.epoch, self.epoch
            else:
                est, cnt = self.csum[i] / v, v
            self.out.pairs[(i, self.psi[i])] = est
            self.out.counts[(i, self.psi[i])] = cnt
            self.esum[i] = 0.0
            self.psi[i] = self._draw(i)


class _BucketRunner:
    """Drives one non-uniform-block instance from routed arrivals."""

    def __init__(self, contexts, S_env: int, K: int, r: int, scale: float,
                 rng, fresh_epoch: bool = True, iota_override=None):
        self.rng = rng
        self.fresh_epoch = fresh_epoch
        self.trace = RunTrace()
        self.prog = _nonuniform_program(contexts, S_env, K, r, scale,
                                        iota_override, self.trace)
        self.inc = IncrementalCollect(next(self.prog), rng, fresh_epoch)
        self.steps = 0

    def serve(self, i: int) -> int:
        return self.inc.serve(i)

    def observe(self, i: int, j: int, y: float) -> None:
        self.inc.observe(i, j, y)
        self.steps += 1
        if self.inc.done:
            req = self.prog.send(self.inc.out)
            self.inc = IncrementalCollect(req, self.rng, self.fresh_epoch)

    def close(self):
        self.prog.close()


def run_regret_general(env, r: int, T: int, rng=None, scale: float = 1.0,
                       fresh_epoch: bool = True) -> RunTrace:
    """General context distributions: estimate nu, bucket contexts by dyadic
    mass, and run one independent non-uniform-block instance per bucket."""
    if T <= 0:
        raise ValidationError("T must be positive")
    if rng is None:
        rng = np.random.default_rng()
    S = env.S
    trace = RunTrace()
    t0, reg0 = env.t, env.total_regret
    J0 = min(int(T), math.ceil(math.sqrt(S * T) * math.log(S * T)))
    nu_hat = estimate_context_distribution(env, J0)
    floor_mass = 1.0 / math.sqrt(S * T)
    active = nu_hat >= floor_mass
    labels = np.full(S, -1, dtype=np.int64)
    with np.errstate(divide="ignore"):
        labels[active] = np.floor(-np.log2(nu_hat[active])).astype(np.int64)
    runners: dict[int, _BucketRunner] = {}
    for l in sorted(set(labels[active].tolist())):
        members = np.flatnonzero(labels == l)
        runners[l] = _BucketRunner(members, S, env.K, r, scale, rng,
                                   fresh_epoch=fresh_epoch)
    trace.events.append({"kind": "buckets", "count": len(runners),
                         "ignored": int(np.sum(~active)), "prefix": J0})
    for _ in range(int(T) - J0):
        i = env.sample_context()
        l = labels[i]
        if l < 0:
            env.pull(i, 0)
            continue
        runner = runners[l]
        j = runner.serve(i)
        y = env.pull(i, j)
        runner.observe(i, j, y)
    for runner in runners.values():
        runner.close()
        trace.flags.extend(runner.trace.flags)
    trace.steps = env.t - t0
    trace.regret = env.total_regret - reg0
    trace.phases = [ph for rn in runners.values() for ph in rn.trace.phases]
    return trace
