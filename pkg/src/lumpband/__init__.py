"""lumpband: simulation, algorithms and benchmarks for context-lumpable bandits."""

from .env import (
    BERNOULLI,
    GAUSSIAN,
    ConfigurationError,
    EnvHandle,
    LowRankModel,
    Policy,
    ProtocolError,
    RewardModel,
    ValidationError,
    build_from_spec,
    build_hard_instance,
    build_lowrank_instance,
    build_lumpable_instance,
    exact_policy_gap,
    load_model,
    model_from_json,
    model_to_json,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "BERNOULLI",
    "GAUSSIAN",
    "ConfigurationError",
    "EnvHandle",
    "LowRankModel",
    "Policy",
    "ProtocolError",
    "RewardModel",
    "ValidationError",
    "build_from_spec",
    "build_hard_instance",
    "build_lowrank_instance",
    "build_lumpable_instance",
    "exact_policy_gap",
    "load_model",
    "model_from_json",
    "model_to_json",
    "save_model",
    "__version__",
]
