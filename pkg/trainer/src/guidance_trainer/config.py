"""Training configuration file handling (JSON, unknown keys rejected)."""
from __future__ import annotations

import json

from .env import EnvConfig
from .ppo import TrainConfig

_ENV_KEYS = {"scenario", "n_agents", "episode_length", "dt", "radius",
             "goal_tolerance", "k_neighbors", "sense_range",
             "v_min", "v_max", "w_min", "w_max"}
_TRAIN_KEYS = {"env", "n_envs", "total_env_steps", "rollout_length", "lr",
               "clip_eps", "gae_lambda", "discount", "entropy_coef",
               "value_coef", "epochs", "minibatch", "max_grad_norm",
               "log_std_init", "hidden", "seed", "deterministic"}


class TrainConfigError(ValueError):
    pass


def parse_config(doc: dict) -> TrainConfig:
    if not isinstance(doc, dict):
        raise TrainConfigError("config must be a JSON object")
    unknown = set(doc) - _TRAIN_KEYS
    if unknown:
        raise TrainConfigError(f"unknown config keys {sorted(unknown)}")
    env_doc = doc.get("env", {})
    unknown_env = set(env_doc) - _ENV_KEYS
    if unknown_env:
        raise TrainConfigError(f"unknown env keys {sorted(unknown_env)}")
    try:
        env = EnvConfig(**env_doc)
        cfg = TrainConfig(env=env, **{k: v for k, v in doc.items() if k != "env"})
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise TrainConfigError(str(exc))
    return cfg


def load_config(path) -> TrainConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise TrainConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise TrainConfigError(f"config is not valid JSON: {exc}")
    return parse_config(doc)
