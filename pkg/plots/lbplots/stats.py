"""Aggregation used by the figures.

Deliberately mirrors the harness `summarize` operation call for call
(np.median / np.mean / np.percentile) so shared statistics agree exactly,
bit for bit.
"""
import numpy as np


def summarize(rows: list[dict], gap_threshold: float | None = None) -> list[dict]:
    """Per (algorithm, checkpoint) medians, means and IQRs across seeds."""
    groups: dict[tuple[str, int], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["algorithm"], row["checkpoint"]), []).append(row)
    out = []
    for (algo, ck) in sorted(groups):
        g = groups[(algo, ck)]
        reg = np.array([x["regret"] for x in g], dtype=float)
        gap = np.array([x["gap"] for x in g], dtype=float)
        rec = {"algorithm": algo, "checkpoint": ck, "n": len(g)}
        for name, v in (("regret", reg), ("gap", gap)):
            rec[f"median_{name}"] = float(np.median(v))
            rec[f"mean_{name}"] = float(np.mean(v))
            rec[f"iqr_{name}"] = float(np.percentile(v, 75) - np.percentile(v, 25))
        if gap_threshold is not None:
            rec["success_rate"] = float(np.mean(gap <= gap_threshold))
        out.append(rec)
    return out


def quartiles_by_checkpoint(rows: list[dict], value: str = "regret"):
    """checkpoints, (q25, q50, q75) arrays for one algorithm's rows."""
    by_ck: dict[int, list[float]] = {}
    for row in rows:
        by_ck.setdefault(row["checkpoint"], []).append(row[value])
    cks = sorted(by_ck)
    q25, q50, q75 = [], [], []
    for ck in cks:
        v = np.asarray(by_ck[ck], dtype=float)
        q25.append(float(np.percentile(v, 25)))
        q50.append(float(np.median(v)))
        q75.append(float(np.percentile(v, 75)))
    return np.asarray(cks), np.asarray(q25), np.asarray(q50), np.asarray(q75)
