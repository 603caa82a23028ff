"""Ground-truth bandit environments with latent block (lumpable) or low-rank reward structure.

A `RewardModel` groups contexts into blocks that share a mean-reward row; a
`LowRankModel` factors the mean-reward matrix through a small latent dimension.
`EnvHandle` wraps a model into a seeded, replayable interaction stream and keeps
exact pseudo-regret accounting.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import ndtri

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
_NOISE_KINDS = (GAUSSIAN, BERNOULLI)

_NOISE_BLOCK = 8192


class ConfigurationError(ValueError):
    """Inconsistent generator or experiment configuration."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class ProtocolError(RuntimeError):
    """Interaction protocol misuse (e.g. pulling before sampling a context)."""


def _as_prob_vector(nu, S: int) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (S,):
        raise ValidationError(f"context distribution must have shape ({S},), got {nu.shape}")
    if np.any(nu < 0):
        raise ValidationError("context distribution has negative entries")
    if abs(float(nu.sum()) - 1.0) > 1e-12:
        raise ValidationError(f"context distribution sums to {nu.sum()!r}, not 1")
    return nu


@dataclass(frozen=True)
class RewardModel:
    """Lumpable instance: block reward matrix `mu` (r x K), grouping `g`, context law `nu`."""

    mu: np.ndarray
    g: np.ndarray
    nu: np.ndarray
    noise: str = GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "mu", np.array(self.mu, dtype=float))
        object.__setattr__(self, "g", np.array(self.g, dtype=np.int64))
        if self.mu.ndim != 2:
            raise ValidationError("mu must be a 2-d matrix")
        r, K = self.mu.shape
        S = self.g.shape[0]
        object.__setattr__(self, "nu", _as_prob_vector(self.nu, S))
        if self.noise not in _NOISE_KINDS:
            raise ValidationError(f"unknown noise kind {self.noise!r}")
        if r > min(S, K):
            raise ValidationError(f"r={r} exceeds min(S,K)=min({S},{K})")
        if np.any(self.g < 0) or np.any(self.g >= r):
            raise ValidationError("block labels out of range")
        if len(np.unique(self.g)) != r:
            raise ValidationError("every block must be nonempty")
        if np.any(self.mu < -1e-12) or np.any(self.mu > 1 + 1e-12):
            raise ValidationError("mu entries must lie in [0, 1]")

    @property
    def S(self) -> int:
        return self.g.shape[0]

    @property
    def K(self) -> int:
        return self.mu.shape[1]

    @property
    def r(self) -> int:
        return self.mu.shape[0]

    @cached_property
    def A(self) -> np.ndarray:
        """Full S x K mean-reward matrix; rows are constant within a block."""
        return self.mu[self.g]

    def block_mass(self) -> np.ndarray:
        """Total context-distribution mass of each block."""
        return np.bincount(self.g, weights=self.nu, minlength=self.r)

    def blocks(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.g == b) for b in range(self.r)]


@dataclass(frozen=True)
class LowRankModel:
    """Low-rank instance A = U @ V with latent coordinates bounded by `B`."""

    U: np.ndarray
    V: np.ndarray
    B: float
    nu: np.ndarray
    noise: str = GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "U", np.array(self.U, dtype=float))
        object.__setattr__(self, "V", np.array(self.V, dtype=float))
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != self.V.shape[0]:
            raise ValidationError("U and V have incompatible shapes")
        S = self.U.shape[0]
        object.__setattr__(self, "nu", _as_prob_vector(self.nu, S))
        if self.noise not in _NOISE_KINDS:
            raise ValidationError(f"unknown noise kind {self.noise!r}")
        if self.B < 0:
            raise ValidationError("B must be nonnegative")
        if np.max(np.abs(self.U), initial=0.0) > self.B + 1e-9:
            raise ValidationError("U entries exceed the coordinate bound B")

    @property
    def S(self) -> int:
        return self.U.shape[0]

    @property
    def K(self) -> int:
        return self.V.shape[1]

    @property
    def r(self) -> int:
        return self.U.shape[1]

    @cached_property
    def A(self) -> np.ndarray:
        return self.U @ self.V


@dataclass(frozen=True)
class Policy:
    """Total map context -> action, stored as an integer array of length S."""

    actions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "actions", np.array(self.actions, dtype=np.int64))
        if self.actions.ndim != 1:
            raise ValidationError("policy must be a 1-d action array")

    def __call__(self, i: int) -> int:
        return int(self.actions[i])


def exact_policy_gap(model, policy: Policy) -> float:
    """Exact suboptimality of `policy` under the model's context distribution."""
    A = np.asarray(model.A, dtype=float)
    S, K = A.shape
    acts = policy.actions
    if acts.shape != (S,):
        raise ValidationError(f"policy must cover all {S} contexts")
    if np.any(acts < 0) or np.any(acts >= K):
        raise ValidationError("policy action out of range")
    gaps = A.max(axis=1) - A[np.arange(S), acts]
    return float(np.dot(model.nu, gaps))


class EnvHandle:
    """Seeded interaction handle over a reward model.

    Context draws and reward noise use two independent RNG streams derived from
    `seed`, so the (context, reward) trace is bit-identical on replay for a fixed
    action sequence. `zero_noise=True` makes every reward equal its mean (test
    hook; the noise stream is then not consumed).
    """

    def __init__(self, model, seed: int = 0, zero_noise: bool = False,
                 record_trace: bool = False):
        self.model = model
        ctx_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
        self._ctx_rng = np.random.default_rng(ctx_ss)
        self._noise_rng = np.random.default_rng(noise_ss)
        self.seed = seed
        self.zero_noise = zero_noise
        self.t = 0
        self.total_regret = 0.0
        self.record_gaps = False
        self.gap_log: list[np.ndarray] = []
        self.record_trace = record_trace
        self.trace_log: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._pending: int | None = None
        self._cdf = np.cumsum(model.nu)
        self._A = np.asarray(model.A, dtype=float)
        self._opt = self._A.max(axis=1)
        self._noise_buf = np.empty(0)
        self._noise_pos = 0

    @property
    def S(self) -> int:
        return self.model.S

    @property
    def K(self) -> int:
        return self.model.K

    # -- context stream -------------------------------------------------

    def sample_context(self) -> int:
        if self._pending is not None:
            raise ProtocolError("previous context was never pulled")
        i = int(min(np.searchsorted(self._cdf, self._ctx_rng.random(), side="right"),
                    self.S - 1))
        self._pending = i
        return i

    def sample_contexts(self, L: int) -> np.ndarray:
        """Draw L i.i.d. contexts at once (each must be answered via pull_many)."""
        if self._pending is not None:
            raise ProtocolError("previous context was never pulled")
        u = self._ctx_rng.random(int(L))
        return np.minimum(np.searchsorted(self._cdf, u, side="right"),
                          self.S - 1).astype(np.int64)

    # -- rewards ---------------------------------------------------------

    def _uniforms(self, k: int) -> np.ndarray:
        # Buffered draws preserve the exact stream order of unbuffered calls.
        out = np.empty(k)
        filled = 0
        while filled < k:
            if self._noise_pos >= len(self._noise_buf):
                self._noise_buf = self._noise_rng.random(_NOISE_BLOCK)
                self._noise_pos = 0
            take = min(k - filled, len(self._noise_buf) - self._noise_pos)
            out[filled:filled + take] = \
                self._noise_buf[self._noise_pos:self._noise_pos + take]
            self._noise_pos += take
            filled += take
        return out

    def pull(self, i: int, j: int) -> float:
        if self._pending is None:
            raise ProtocolError("pull requires a freshly sampled context")
        if i != self._pending:
            raise ProtocolError(f"pulled context {i} but {self._pending} was sampled")
        self._pending = None
        return float(self.pull_many(np.array([i]), np.array([j]))[0])

    def pull_many(self, ctx: np.ndarray, arms: np.ndarray) -> np.ndarray:
        """Vectorized pulls; `ctx` must be contexts previously drawn (in any order)."""
        ctx = np.asarray(ctx, dtype=np.int64)
        arms = np.asarray(arms, dtype=np.int64)
        if ctx.shape != arms.shape:
            raise ValueError("ctx and arms must have equal length")
        if ctx.size and (ctx.min() < 0 or ctx.max() >= self.S):
            raise ValueError("context index out of range")
        if arms.size and (arms.min() < 0 or arms.max() >= self.K):
            raise ValueError("action index out of range")
        means = self._A[ctx, arms]
        if self.zero_noise:
            y = means.copy()
        elif self.model.noise == GAUSSIAN:
            u = np.clip(self._uniforms(ctx.size), 1e-16, 1 - 1e-16)
            y = means + ndtri(u)
        else:
            y = (self._uniforms(ctx.size) < means).astype(float)
        gaps = self._opt[ctx] - means
        self.total_regret += float(gaps.sum())
        self.t += ctx.size
        if self.record_gaps:
            self.gap_log.append(gaps)
        if self.record_trace:
            self.trace_log.append((ctx.copy(), arms.copy(), y.copy()))
        return y

    def gap_history(self) -> np.ndarray:
        """Per-step pseudo-regret increments recorded while record_gaps was on."""
        if not self.gap_log:
            return np.empty(0)
        return np.concatenate(self.gap_log)


# -- generators ------------------------------------------------------------


def _make_nu(nu, S: int) -> np.ndarray:
    if isinstance(nu, str):
        if nu == "uniform":
            return np.full(S, 1.0 / S)
        raise ConfigurationError(f"unknown nu shape {nu!r}")
    if isinstance(nu, dict) and "power-law" in nu:
        expo = float(nu["power-law"])
        w = np.arange(1, S + 1, dtype=float) ** (-expo)
        return w / w.sum()
    if isinstance(nu, tuple) and len(nu) == 2 and nu[0] == "power-law":
        return _make_nu({"power-law": nu[1]}, S)
    return _as_prob_vector(nu, S)


def _make_blocks(blocks, S: int, r: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(blocks, str):
        if blocks == "equal":
            sizes = np.full(r, S // r)
            sizes[: S % r] += 1
        elif blocks == "random":
            g = np.concatenate([np.arange(r), rng.integers(0, r, S - r)])
            return rng.permutation(g)
        else:
            raise ConfigurationError(f"unknown block scheme {blocks!r}")
    else:
        sizes = np.asarray(blocks, dtype=int)
        if sizes.shape != (r,) or sizes.sum() != S or np.any(sizes < 1):
            raise ConfigurationError("explicit block sizes must be r positive ints summing to S")
    return np.repeat(np.arange(r), sizes)


def build_lumpable_instance(S: int, K: int, r: int, nu="uniform", blocks="equal",
                            mu="random-uniform", noise: str = GAUSSIAN,
                            seed: int = 0) -> RewardModel:
    """Construct a lumpable instance; deterministic in `seed`."""
    if r < 1 or r > min(S, K):
        raise ConfigurationError(f"need 1 <= r <= min(S,K); got r={r}, S={S}, K={K}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    nu_vec = _make_nu(nu, S)
    g = _make_blocks(blocks, S, r, rng)
    if isinstance(mu, str):
        if mu != "random-uniform":
            raise ConfigurationError(f"unknown mu source {mu!r}")
        mu_mat = rng.random((r, K))
    else:
        mu_mat = np.asarray(mu, dtype=float)
        if mu_mat.shape != (r, K):
            raise ConfigurationError(f"mu must have shape ({r},{K}), got {mu_mat.shape}")
    return RewardModel(mu=mu_mat, g=g, nu=nu_vec, noise=noise)


def _surjective_labels(rng: np.random.Generator, S: int, m: int) -> np.ndarray:
    # Uniform labels conditioned on hitting every value; resampling keeps the law.
    for _ in range(10_000):
        g = rng.integers(0, m, S)
        if len(np.unique(g)) == m:
            return g
    raise ConfigurationError(f"could not draw surjective labels for S={S}, m={m}")


def build_hard_instance(case: int, S: int, K: int, r: int, eps: float,
                        seed: int = 0) -> RewardModel:
    """Lower-bound constructions: per-block Bernoulli rewards 1/2 + eps on one arm."""
    if case not in (1, 2, 3):
        raise ValidationError(f"invalid hard-instance case {case!r}")
    if not (0 < eps < 0.5):
        raise ValidationError("eps must lie in (0, 1/2)")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if case == 1:
        # r >= K collapses to K distinct blocks (labels are drawn uniformly from [K]).
        if r < K:
            raise ValidationError("case 1 requires r >= K")
        if S < K:
            raise ValidationError("case 1 requires S >= K for nonempty blocks")
        mu = np.full((K, K), 0.5) + eps * np.eye(K)
        g = _surjective_labels(rng, S, K)
        return RewardModel(mu=mu, g=g, nu=np.full(S, 1.0 / S), noise=BERNOULLI)
    if case == 2:
        if S < r:
            raise ValidationError("case 2 requires S >= r")
        mu = np.full((r, K), 0.5)
        for b in range(min(r, K)):
            mu[b, b] += eps
        g = _surjective_labels(rng, S, r)
        return RewardModel(mu=mu, g=g, nu=np.full(S, 1.0 / S), noise=BERNOULLI)
    # case 3: nu uniform over the first r contexts only (literal construction).
    if S < r:
        raise ValidationError("case 3 requires S >= r")
    nu = np.zeros(S)
    nu[:r] = 1.0 / r
    g = np.minimum(np.arange(S), r - 1)
    jstar = rng.integers(0, K, r)
    mu = np.full((r, K), 0.5)
    mu[np.arange(r), jstar] += eps
    return RewardModel(mu=mu, g=g, nu=nu, noise=BERNOULLI)


def build_lowrank_instance(S: int, K: int, r: int, B: float, seed: int = 0,
                           nonneg: bool = False, noise: str = GAUSSIAN) -> LowRankModel:
    """Random rank-r instance with A = U V confined to [0, 1]."""
    if B < 0:
        raise ValidationError("B must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    nu = np.full(S, 1.0 / S)
    if B == 0:
        return LowRankModel(U=np.zeros((S, r)), V=np.zeros((r, K)), B=0.0, nu=nu,
                            noise=noise)
    if nonneg:
        U = rng.uniform(0, B, (S, r))
        V = rng.uniform(0, 1, (r, K))
        colsum = np.maximum(V.sum(axis=0), 1e-12)
        V = V / (colsum * max(1.0, B))
        return LowRankModel(U=U, V=V, B=B, nu=nu, noise=noise)
    # Signed case: a constant first latent coordinate keeps A inside [0,1]
    # at rank <= r (a free affine shift is impossible under a pure product).
    U = np.empty((S, r))
    U[:, 0] = B
    V = np.empty((r, K))
    V[0, :] = 0.5 / B
    if r > 1:
        U[:, 1:] = rng.uniform(-B, B, (S, r - 1))
        W = rng.uniform(-1, 1, (r - 1, K))
        l1 = np.maximum(np.abs(W).sum(axis=0), 1e-12)
        V[1:, :] = W / (2.0 * B * l1)
    return LowRankModel(U=U, V=V, B=B, nu=nu, noise=noise)


# -- JSON serialization ------------------------------------------------------


def model_to_json(model) -> dict:
    if isinstance(model, RewardModel):
        return {
            "kind": "lumpable",
            "S": model.S, "K": model.K, "r": model.r,
            "mu": model.mu.tolist(),
            "g": model.g.tolist(),
            "nu": model.nu.tolist(),
            "noise": model.noise,
        }
    if isinstance(model, LowRankModel):
        return {
            "kind": "lowrank",
            "S": model.S, "K": model.K, "r": model.r,
            "U": model.U.tolist(),
            "V": model.V.tolist(),
            "B": model.B,
            "nu": model.nu.tolist(),
            "noise": model.noise,
        }
    raise ConfigurationError(f"cannot serialize {type(model).__name__}")


def model_from_json(doc: dict):
    kind = doc.get("kind", "lumpable")
    if kind == "lumpable":
        return RewardModel(mu=doc["mu"], g=doc["g"], nu=doc["nu"],
                           noise=doc.get("noise", GAUSSIAN))
    if kind == "lowrank":
        return LowRankModel(U=doc["U"], V=doc["V"], B=float(doc["B"]), nu=doc["nu"],
                            noise=doc.get("noise", GAUSSIAN))
    raise ConfigurationError(f"unknown instance kind {kind!r}")


def build_from_spec(spec: dict):
    """Build a model from a generator-spec document (see README for the schema)."""
    kind = spec.get("kind", "lumpable")
    if kind == "lumpable":
        return build_lumpable_instance(
            S=int(spec["S"]), K=int(spec["K"]), r=int(spec["r"]),
            nu=spec.get("nu", "uniform"), blocks=spec.get("blocks", "equal"),
            mu=spec.get("mu", "random-uniform"), noise=spec.get("noise", GAUSSIAN),
            seed=int(spec.get("seed", 0)))
    if kind == "hard":
        return build_hard_instance(
            case=int(spec["case"]), S=int(spec["S"]), K=int(spec["K"]),
            r=int(spec["r"]), eps=float(spec["eps"]), seed=int(spec.get("seed", 0)))
    if kind == "lowrank":
        return build_lowrank_instance(
            S=int(spec["S"]), K=int(spec["K"]), r=int(spec["r"]),
            B=float(spec["B"]), seed=int(spec.get("seed", 0)),
            nonneg=bool(spec.get("nonneg", False)),
            noise=spec.get("noise", GAUSSIAN))
    raise ConfigurationError(f"unknown spec kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_json(model), f)


def load_model(path):
    with open(path, encoding="utf-8") as f:
        return model_from_json(json.load(f))
