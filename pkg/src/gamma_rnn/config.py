"""Run configuration: JSON files, dotted-path overrides, validation.

A config is a nested JSON object with sections ``model``, ``train`` and
``data`` plus top-level ``seed`` and ``out``. Unknown keys are rejected.
Command lines patch individual entries with repeatable ``--set
section.key=value`` flags; values are parsed as JSON with a plain-string
fallback, so ``--set train.lr=0.001`` and ``--set data.mode=seq112x7``
both do the obvious thing.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

__all__ = [
    "ConfigError",
    "ModelConfig",
    "TrainConfig",
    "DataConfig",
    "RunConfig",
    "default_config_dict",
    "load_config_file",
    "apply_overrides",
    "build_run_config",
    "effective_config_dict",
]


class ConfigError(ValueError):
    """Configuration is malformed or violates cross-field constraints."""


DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "out": None,
    "model": {
        "kind": "lstm",
        "hidden": 128,
        "layers": 1,
        "memory_order": 3,
        "readout_lag": False,
        "shared_forget": False,
        "forget_bias": None,
        "level_timescales": None,
        "fanin_input": False,
    },
    "train": {
        "optimizer": "adam",
        "lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "clip_norm": 5.0,
        "batch_size": 64,
        "epochs": 10,
        "log_every": 10,
    },
    "data": {
        "source": "mnist",
        "mode": "seq112x7",
        "dir": None,
        "train_limit": None,
        "test_limit": None,
        "n": 2000,
        "seq_len": 50,
        "lag": 3,
    },
}


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "lstm"
    hidden: int = 128
    layers: int = 1
    memory_order: int = 3
    readout_lag: bool = False
    shared_forget: bool = False
    forget_bias: float | None = None
    level_timescales: list[float] | None = None
    fanin_input: bool = False


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 5.0
    batch_size: int = 64
    epochs: int = 10
    log_every: int = 10


@dataclass(frozen=True)
class DataConfig:
    source: str = "mnist"
    mode: str = "seq112x7"
    dir: str | None = None
    train_limit: int | None = None
    test_limit: int | None = None
    n: int = 2000
    seq_len: int = 50
    lag: int = 3


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    seed: int = 0
    out: str | None = None


def default_config_dict() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        dotted = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {dotted!r} must be a section, got {value!r}")
            out[key] = _merge(base[key], value, dotted + ".")
        else:
            out[key] = value
    return out


def load_config_file(path) -> dict:
    """Read a JSON config and merge it over the defaults."""
    try:
        user = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return _merge(DEFAULTS, user)


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply ``a.b=value`` patches; values parse as JSON, else raw string."""
    config = copy.deepcopy(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown config section {part!r} in {dotted!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(node[leaf], dict):
            raise ConfigError(f"config key {dotted!r} is a section, not a value")
        node[leaf] = value
    return config


def _build(cls, section: dict, name: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"bad {name} section: {exc}") from exc


def build_run_config(config: dict) -> RunConfig:
    """Validate a merged config dict into a RunConfig."""
    cfg = RunConfig(
        model=_build(ModelConfig, config["model"], "model"),
        train=_build(TrainConfig, config["train"], "train"),
        data=_build(DataConfig, config["data"], "data"),
        seed=int(config["seed"]),
        out=config["out"],
    )
    m = cfg.model
    if m.kind not in ("lstm", "stacked_lstm", "gamma_lstm"):
        raise ConfigError(f"model.kind must be lstm|stacked_lstm|gamma_lstm, got {m.kind!r}")
    if m.hidden < 1:
        raise ConfigError(f"model.hidden must be >= 1, got {m.hidden}")
    if m.kind == "lstm" and m.layers != 1:
        raise ConfigError("model.kind 'lstm' is single-layer; use 'stacked_lstm'")
    if m.kind == "stacked_lstm" and m.layers < 1:
        raise ConfigError(f"model.layers must be >= 1, got {m.layers}")
    if m.kind == "gamma_lstm" and m.memory_order < 1:
        raise ConfigError(f"model.memory_order must be >= 1, got {m.memory_order}")
    t = cfg.train
    if t.optimizer not in ("adam", "sgd"):
        raise ConfigError(f"train.optimizer must be adam|sgd, got {t.optimizer!r}")
    if t.lr <= 0 or t.batch_size < 1 or t.epochs < 0 or t.log_every < 1:
        raise ConfigError("train.lr must be > 0; batch_size, log_every >= 1; epochs >= 0")
    if t.clip_norm is not None and t.clip_norm <= 0:
        raise ConfigError(f"train.clip_norm must be > 0 or null, got {t.clip_norm}")
    d = cfg.data
    if d.source not in ("mnist", "delay", "adding"):
        raise ConfigError(f"data.source must be mnist|delay|adding, got {d.source!r}")
    if d.source == "mnist":
        from .data import RESHAPE_MODES

        if d.mode not in RESHAPE_MODES:
            raise ConfigError(f"data.mode must be one of {sorted(RESHAPE_MODES)}, got {d.mode!r}")
    if d.source == "delay" and not 0 <= d.lag < d.seq_len:
        raise ConfigError(f"data.lag must lie in [0, data.seq_len), got {d.lag}")
    return cfg


def effective_config_dict(config: dict) -> str:
    """Serialized form written next to run outputs; reload-stable."""
    return json.dumps(config, indent=2, sort_keys=True) + "\n"
