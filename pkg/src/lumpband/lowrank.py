"""Reduction from contextual low-rank bandits to context-lumpable bandits.

Rows of the latent matrix U are covered by an alpha-grid over [-B, B]^r; two
contexts in the same cell have rewards within the misspecification alpha (given
the generator's column-normalized V).  The lumpable learners then run with the
grid-cell count in place of the block count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import ValidationError
from .pac import PacConfig, PacResult, pac_general
from .regret import RunTrace, run_regret_nonuniform


def grid_cell(w, alpha: float, B: float) -> tuple[int, ...]:
    """Cell id of latent row w on the alpha-grid of [-B, B]^r (1-based axes)."""
    w = np.asarray(w, dtype=float)
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    if np.any(np.abs(w) > B + 1e-12):
        raise ValidationError("coordinate outside [-B, B]")
    n_cells = max(1, math.ceil(2.0 * B / alpha))
    idx = np.ceil((w + B) / alpha).astype(int)
    idx = np.clip(idx, 1, n_cells)
    return tuple(int(k) for k in idx)


def cell_count_bound(alpha: float, B: float, r: int, S: int) -> int:
    """A-priori bound on the number of occupied grid cells."""
    per_axis = max(1, math.ceil(2.0 * B / alpha))
    try:
        return int(min(per_axis ** r, S))
    except OverflowError:
        return int(S)


def regret_alpha(S: int, K: int, r: int, T: int) -> float:
    """Grid resolution for the regret reduction: alpha = (S+K)^p T^-p, p=1/(3r+2)."""
    p = 1.0 / (3 * r + 2)
    return (S + K) ** p * float(T) ** (-p)


@dataclass(frozen=True)
class GridReduction:
    """Test-time oracle: the actual cell assignment of a model's latent rows."""

    alpha: float
    B: float
    r: int
    cells: dict[int, tuple[int, ...]]

    @property
    def R_alpha(self) -> int:
        return len(set(self.cells.values()))


def grid_reduction(model, alpha: float) -> GridReduction:
    """Map every context of a low-rank model to its grid cell (needs the model)."""
    cells = {i: grid_cell(model.U[i], alpha, model.B) for i in range(model.S)}
    return GridReduction(alpha=alpha, B=model.B, r=model.r, cells=cells)


def lowrank_pac(env, eps: float, delta: float, B: float, r: int,
                scale: float = 1.0, rng=None) -> PacResult:
    """PAC learning on a low-rank environment via the alpha = eps grid."""
    alpha = eps
    R = cell_count_bound(alpha, B, r, env.S)
    cfg = PacConfig(eps=eps, delta=delta, r=R, scale=scale)
    return pac_general(env, cfg, rng=rng)


def lowrank_regret(env, r: int, B: float, T: int, scale: float = 1.0,
                   rng=None, iota_override=None) -> RunTrace:
    """Regret minimization on a low-rank environment via the grid reduction."""
    if T <= 0:
        raise ValidationError("T must be positive")
    alpha = regret_alpha(env.S, env.K, r, T)
    R = cell_count_bound(alpha, B, r, env.S)
    return run_regret_nonuniform(env, R, max_steps=int(T), rng=rng, scale=scale,
                                 iota_override=iota_override)
