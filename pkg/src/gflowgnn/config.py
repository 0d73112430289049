"""Training and experiment configuration.

Configs are flat JSON objects whose keys are the dataclass field names below.
Unknown keys are rejected. ``GFLOW_SEED`` in the environment overrides
``seed`` when a config is loaded from disk.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigurationError

SEED_ENV = "GFLOW_SEED"


@dataclass
class TrainConfig:
    budget: int | None = None          # None -> 5 * num_classes
    batch_size: int = 16
    epochs: int = 1000
    lr: float = 1e-3
    eps_loss: float = 1e-8
    alpha: float = 10.0
    beta: float = 1.0                  # reward exponent, r ** beta
    log_flow_clip: float = 30.0
    explore_eps: float = 0.0
    policy_kind: str = "mlp"
    seed: int = 0
    classifier_seed: int | None = None  # None -> fresh classifier init per episode
    hidden: int = 16
    classifier_lr: float = 0.01
    max_epochs: int = 300
    patience: int = 20
    jobs: int = 1

    def resolved_budget(self, graph) -> int:
        return self.budget if self.budget is not None else 5 * graph.C

    def validate(self) -> None:
        checks = [
            (self.budget is None or self.budget >= 1, "budget must be >= 1"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.lr > 0, "lr must be positive"),
            (self.eps_loss >= 0, "eps_loss must be >= 0"),
            (self.alpha > 0, "alpha must be positive"),
            (self.beta > 0, "beta must be positive"),
            (self.log_flow_clip > 0, "log_flow_clip must be positive"),
            (0 <= self.explore_eps <= 1, "explore_eps must lie in [0, 1]"),
            (self.policy_kind in ("mlp", "gcn"), "policy_kind must be 'mlp' or 'gcn'"),
            (self.hidden >= 1, "hidden must be >= 1"),
            (self.jobs >= 1, "jobs must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)

    def classifier_kwargs(self) -> dict:
        return {"hidden": self.hidden, "lr": self.classifier_lr,
                "max_epochs": self.max_epochs, "patience": self.patience}


@dataclass
class ExperimentConfig(TrainConfig):
    edges: str | None = None
    features: str | None = None
    labels: str | None = None
    splits: str | None = None
    num_classes: int | None = None
    # synthetic instance, used when no dataset paths are given
    sbm: dict | None = None
    eval_runs: int = 30
    thresholds: list = field(default_factory=list)
    greedy: bool = False
    out: str | None = None

    def dataset_paths(self):
        return [p for p in (self.edges, self.features, self.labels, self.splits) if p is not None]


def config_from_dict(data: dict, cls=ExperimentConfig, base_dir=None):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    cfg = cls(**data)
    if base_dir is not None and isinstance(cfg, ExperimentConfig):
        for key in ("edges", "features", "labels", "splits"):
            p = getattr(cfg, key)
            if p is not None and not Path(p).is_absolute():
                setattr(cfg, key, str(Path(base_dir) / p))
    cfg.validate()
    return cfg


def load_config(path, cls=ExperimentConfig, env=None):
    env = os.environ if env is None else env
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer") from None
    return config_from_dict(data, cls, base_dir=Path(path).parent)


def config_to_dict(cfg) -> dict:
    return asdict(cfg)
