"""Constrained policy optimization on desk-scale CMDPs."""

from ._core import (
    Config,
    ConfigError,
    NumericError,
    PointMassEnv,
    Trainer,
    chain_exact_returns,
    compare,
    evaluate,
    gae,
    kappa_schedule,
    load_config,
    normalize_advantages,
    parse_config,
    train,
)

__all__ = [
    "Config",
    "ConfigError",
    "NumericError",
    "PointMassEnv",
    "Trainer",
    "chain_exact_returns",
    "compare",
    "evaluate",
    "gae",
    "kappa_schedule",
    "load_config",
    "normalize_advantages",
    "parse_config",
    "train",
]
