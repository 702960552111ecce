"""Flat run configuration: one JSON object of key/value pairs plus overrides.

Every key has a default and a one-line description in ``DOCS``; unknown keys
are rejected so that typos fail loudly instead of silently using a default.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from cbrl.policy.ppo import PPOConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    game: str = "Paddles"
    workdir: str = "run"
    seed: int = 0
    # data
    train_sequences: int = 2048
    val_sequences: int = 128
    test_sequences: int = 128
    # vision
    tau: float = 0.1
    min_area: int = 4
    calibration_frames: int = 100
    k_nn: int = 24
    # tracking and concepts
    d_max: float = 0.15
    history: int = 4
    schema: str = "pruned"
    extractor: str = "ground_truth"
    # policy
    learning_rate: float = 3e-4
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 64
    horizon: int = 2048
    total_frames: int = 1_000_000
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden_layers: int = 2
    n_envs: int = 1
    eval_interval: int = 100_000
    target_reward: float = float("inf")
    # distillation
    mu: int = 16
    eps: float = 0.25
    distill_states: int = 50_000
    holdout_states: int = 5_000
    substitution_cap: int = 512
    # agent evaluation
    eval_episodes: int = 5
    eval_seed: int = 1000

    def __post_init__(self):
        if self.schema not in ("full", "pruned"):
            raise ConfigError(f"schema must be 'full' or 'pruned', not {self.schema!r}")
        if self.extractor not in ("ground_truth", "vision"):
            raise ConfigError(f"extractor must be 'ground_truth' or 'vision', not {self.extractor!r}")
        if self.hidden_layers not in (1, 2):
            raise ConfigError("hidden_layers must be 1 or 2")
        if not 0.0 <= self.eps <= 1.0:
            raise ConfigError("eps must lie in [0, 1]")

    def ppo(self) -> PPOConfig:
        names = {f.name for f in fields(PPOConfig)}
        values = {k: v for k, v in asdict(self).items() if k in names}
        return PPOConfig(**values)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


DOCS = {
    "game": "Paddles, Brawl or Slalom",
    "workdir": "directory holding every artifact of the run",
    "seed": "master seed for data generation, k-means, PPO and distillation",
    "train_sequences": "training sequences of 4 frames",
    "val_sequences": "validation sequences (classifier fitting and naming)",
    "test_sequences": "test sequences (detection evaluation)",
    "tau": "foreground threshold as a fraction of 255 (L-infinity colour distance)",
    "min_area": "smallest blob kept, in pixels",
    "calibration_frames": "training frames used for the mode background",
    "k_nn": "references voting on each centroid's name",
    "d_max": "largest centre distance for continuing a track",
    "history": "positions remembered per track",
    "schema": "concept layout: full or pruned",
    "extractor": "object source for the agent: ground_truth or vision",
    "learning_rate": "Adam step size",
    "clip": "PPO ratio clip",
    "gamma": "discount",
    "gae_lambda": "GAE lambda",
    "epochs": "passes over each rollout",
    "minibatch_size": "transitions per gradient step",
    "horizon": "transitions per rollout",
    "total_frames": "environment steps of training",
    "ent_coef": "entropy bonus weight",
    "vf_coef": "value loss weight",
    "max_grad_norm": "global gradient norm clip",
    "hidden_layers": "1 or 2 hidden layers of 64 units",
    "n_envs": "environment instances stepped round-robin",
    "eval_interval": "frames between evaluations during training (0 disables)",
    "target_reward": "stop training once an evaluation mean reaches this (inf never stops)",
    "mu": "minimum node size before a tree may split",
    "eps": "probability of a random action while collecting distillation states",
    "distill_states": "states used to induce rules",
    "holdout_states": "held-out states for the fidelity report",
    "substitution_cap": "largest clause cross product kept per hidden-layer rule",
    "eval_episodes": "seeded episodes per agent evaluation",
    "eval_seed": "seed of the first evaluation episode",
}


def _coerce(key: str, raw, default):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in ("1", "true", "yes"):
            return True
        if str(raw).lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {raw!r}") from None
    return str(raw)


def build_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Defaults, then the JSON file, then ``key=value`` overrides."""
    defaults = asdict(RunConfig())
    values = dict(defaults)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        for key, raw in doc.items():
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, raw, defaults[key])
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw, defaults[key])
    return RunConfig(**values)
