"""Experiment orchestration: seeded replications, metric rows, CSV persistence.

The CSV schema is the package's stable external interface; the wall-clock
column is excluded from the determinism hash so reruns of the same config
hash identically.
"""
from __future__ import annotations

import csv
import hashlib
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, lowrank
from .env import (ConfigurationError, EnvHandle, build_from_spec,
                  exact_policy_gap, load_model, model_from_json)
from .pac import PacConfig, pac_general, pac_uniform
from .regret import (run_regret_general, run_regret_nonuniform,
                     run_regret_uniform)

NA = -1.0

COLUMNS = [
    "experiment_id", "algorithm", "seed", "S", "K", "r", "eps_or_T",
    "checkpoint", "regret", "samples", "gap", "candidate_set_size",
    "partition_size", "scale", "wall_ms",
]

PAC_ALGOS = ("pac-uniform", "pac-general", "pac-naive", "pac-lowrank")
REGRET_ALGOS = ("regret-uniform", "regret-nonuniform", "regret-general",
                "ucb", "exp3", "regret-lowrank")


@dataclass
class MetricsRow:
    experiment_id: str
    algorithm: str
    seed: int
    S: int
    K: int
    r: int
    eps_or_T: float
    checkpoint: int
    regret: float = NA
    samples: float = NA
    gap: float = NA
    candidate_set_size: float = NA
    partition_size: float = NA
    scale: float = 1.0
    wall_ms: float = 0.0

    def as_list(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class ExperimentConfig:
    experiment_id: str
    instance: dict | str
    algorithm: str
    seeds: list[int]
    params: dict = field(default_factory=dict)
    checkpoints: list[int] = field(default_factory=list)
    scale: float = 1.0

    def __post_init__(self):
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be nonempty and distinct")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ConfigurationError("checkpoints must be strictly increasing")
        if self.algorithm not in PAC_ALGOS + REGRET_ALGOS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")


def _load_instance(instance):
    if isinstance(instance, str):
        return load_model(instance)
    if "mu" in instance or "U" in instance:
        return model_from_json(instance)
    return build_from_spec(instance)


def _algo_rng(seed: int) -> np.random.Generator:
    # Named-stream split: the env uses `seed` directly, the learner gets an
    # independent stream derived from (seed, fixed tag).
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0xA160]))


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def run_one(cfg: ExperimentConfig, seed: int, model=None) -> list[MetricsRow]:
    """One seeded replication; returns its metric rows."""
    if model is None:
        model = _load_instance(cfg.instance)
    algo = cfg.algorithm
    p = cfg.params
    rng = _algo_rng(seed)
    start = time.perf_counter()

    def base_row(**kw) -> MetricsRow:
        return MetricsRow(experiment_id=cfg.experiment_id, algorithm=algo,
                          seed=seed, S=model.S, K=model.K, r=model.r,
                          scale=cfg.scale, **kw)

    if algo in PAC_ALGOS:
        eps, delta = float(p["eps"]), float(p["delta"])
        env = EnvHandle(model, seed=seed, zero_noise=bool(p.get("zero_noise", False)))
        if algo == "pac-uniform":
            res = pac_uniform(env, PacConfig(eps=eps, delta=delta,
                                             r=int(p.get("r", model.r)),
                                             scale=cfg.scale), rng=rng)
        elif algo == "pac-general":
            res = pac_general(env, PacConfig(eps=eps, delta=delta,
                                             r=int(p.get("r", model.r)),
                                             scale=cfg.scale), rng=rng)
        elif algo == "pac-naive":
            res = baselines.pac_naive(env, eps, delta)
        else:
            res = lowrank.lowrank_pac(env, eps, delta, B=float(p["B"]),
                                      r=int(p.get("r", model.r)),
                                      scale=cfg.scale, rng=rng)
        wall = (time.perf_counter() - start) * 1e3
        row = base_row(eps_or_T=eps, checkpoint=res.total_steps,
                       samples=float(res.total_steps),
                       gap=exact_policy_gap(model, res.policy),
                       candidate_set_size=float(len(res.candidates.arms))
                       if res.candidates.arms else NA,
                       wall_ms=wall)
        return [row]

    # regret algorithms
    checkpoints = list(cfg.checkpoints) or [int(p["steps"])]
    T = max(checkpoints)
    env = EnvHandle(model, seed=seed, zero_noise=bool(p.get("zero_noise", False)))
    env.record_gaps = True
    r_in = int(p.get("r", model.r))
    if algo == "regret-uniform":
        trace = run_regret_uniform(env, r_in, max_steps=T, rng=rng, scale=cfg.scale)
    elif algo == "regret-nonuniform":
        trace = run_regret_nonuniform(env, r_in, max_steps=T, rng=rng,
                                      scale=cfg.scale)
    elif algo == "regret-general":
        trace = run_regret_general(env, r_in, T=T, rng=rng, scale=cfg.scale)
    elif algo == "ucb":
        trace = baselines.regret_ucb_per_context(env, T)
    elif algo == "exp3":
        trace = baselines.exp3_constant_experts(env, T)
    else:
        trace = lowrank.lowrank_regret(env, r_in, B=float(p["B"]), T=T,
                                       scale=cfg.scale, rng=rng)
    wall = (time.perf_counter() - start) * 1e3
    cum = np.cumsum(env.gap_history())
    psize = float(len(trace.final_state.partition)) if trace.final_state else NA
    rows = []
    for ck in checkpoints:
        reg = float(cum[min(ck, len(cum)) - 1]) if len(cum) else 0.0
        rows.append(base_row(eps_or_T=float(T), checkpoint=ck, regret=reg,
                             samples=float(min(ck, len(cum))),
                             partition_size=psize, wall_ms=wall))
    return rows


def run_experiment(cfg: ExperimentConfig) -> list[MetricsRow]:
    """All seeded replications, merged in (seed, checkpoint) order."""
    model = _load_instance(cfg.instance)
    workers = int(os.environ.get("LUMPBAND_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(lambda s: run_one(cfg, s, model), cfg.seeds))
    else:
        chunks = [run_one(cfg, s, model) for s in cfg.seeds]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.seed, r.checkpoint))
    return rows


def write_results(rows: list[MetricsRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row.as_list()])


def read_results(path) -> list[MetricsRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != COLUMNS:
            raise ConfigurationError(
                f"unexpected CSV schema: {reader.fieldnames} != {COLUMNS}")
        for rec in reader:
            rows.append(MetricsRow(
                experiment_id=rec["experiment_id"], algorithm=rec["algorithm"],
                seed=int(rec["seed"]), S=int(rec["S"]), K=int(rec["K"]),
                r=int(rec["r"]), eps_or_T=float(rec["eps_or_T"]),
                checkpoint=int(rec["checkpoint"]), regret=float(rec["regret"]),
                samples=float(rec["samples"]), gap=float(rec["gap"]),
                candidate_set_size=float(rec["candidate_set_size"]),
                partition_size=float(rec["partition_size"]),
                scale=float(rec["scale"]), wall_ms=float(rec["wall_ms"])))
    return rows


def summarize(rows: list[MetricsRow], gap_threshold: float | None = None) -> list[dict]:
    """Per (algorithm, checkpoint) medians, means and IQRs across seeds."""
    groups: dict[tuple[str, int], list[MetricsRow]] = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.checkpoint), []).append(row)
    out = []
    for (algo, ck) in sorted(groups):
        g = groups[(algo, ck)]
        reg = np.array([x.regret for x in g], dtype=float)
        gap = np.array([x.gap for x in g], dtype=float)
        rec = {"algorithm": algo, "checkpoint": ck, "n": len(g)}
        for name, v in (("regret", reg), ("gap", gap)):
            rec[f"median_{name}"] = float(np.median(v))
            rec[f"mean_{name}"] = float(np.mean(v))
            rec[f"iqr_{name}"] = float(np.percentile(v, 75) - np.percentile(v, 25))
        if gap_threshold is not None:
            rec["success_rate"] = float(np.mean(gap <= gap_threshold))
        out.append(rec)
    return out


def determinism_hash(rows: list[MetricsRow]) -> str:
    """SHA-256 over every column except wall-clock."""
    h = hashlib.sha256()
    for row in rows:
        vals = row.as_list()[:-1]  # wall_ms is last
        h.update(("|".join(_fmt(v) for v in vals) + "\n").encode("utf-8"))
    return h.hexdigest()


def config_from_json(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            experiment_id=doc["experiment_id"],
            instance=doc["instance"],
            algorithm=doc["algorithm"],
            seeds=[int(s) for s in doc["seeds"]],
            params=dict(doc.get("params", {})),
            checkpoints=[int(c) for c in doc.get("checkpoints", [])],
            scale=float(doc.get("scale", 1.0)))
    except KeyError as e:
        raise ConfigurationError(f"missing config field: {e}") from None
