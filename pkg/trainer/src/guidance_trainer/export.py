"""Export trained policies to the portable weights document.

Field names and layer semantics follow the consumer's contract exactly:
a layer maps a (1 x rows) input to (1 x cols) via x @ W + b followed by the
activation; W is stored row-major. The consumer applies the same tanh
squashing and std scaling used during training, so exported behavior matches
the trained policy.
"""
from __future__ import annotations

import json

import numpy as np

from .env import EnvConfig
from .ppo import ActorCritic

FORMAT_VERSION = 1


def _sig9(x: float) -> float:
    return float(f"{float(x):.9g}")


def weights_document(model: ActorCritic, env_cfg: EnvConfig) -> dict:
    layers = []
    linears = [m for m in model.pi if hasattr(m, "weight")]
    acts = ["tanh"] * (len(linears) - 1) + ["linear"]
    for linear, act in zip(linears, acts):
        w = linear.weight.detach().numpy().T  # (in, out) row-major
        b = linear.bias.detach().numpy()
        layers.append({
            "rows": int(w.shape[0]),
            "cols": int(w.shape[1]),
            "w": [_sig9(v) for v in w.ravel()],
            "b": [_sig9(v) for v in b],
            "act": act,
        })
    return {
        "format_version": FORMAT_VERSION,
        "k_neighbors": env_cfg.k_neighbors,
        "sense_range": _sig9(env_cfg.sense_range),
        "action_low": [_sig9(v) for v in env_cfg.action_low],
        "action_high": [_sig9(v) for v in env_cfg.action_high],
        "log_std": [_sig9(v) for v in model.log_std.detach().numpy()],
        "layers": layers,
    }


def save_policy(model: ActorCritic, env_cfg: EnvConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(weights_document(model, env_cfg), fh, indent=1)
        fh.write("\n")


def infer_mean(doc: dict, obs: np.ndarray) -> np.ndarray:
    """Reference forward pass over an exported document (numpy only)."""
    x = np.asarray(obs, dtype=float)
    for layer in doc["layers"]:
        w = np.asarray(layer["w"]).reshape(layer["rows"], layer["cols"])
        x = x @ w + np.asarray(layer["b"])
        if layer["act"] == "tanh":
            x = np.tanh(x)
        elif layer["act"] == "relu":
            x = np.maximum(x, 0.0)
    low = np.asarray(doc["action_low"])
    high = np.asarray(doc["action_high"])
    return low + (np.tanh(x) + 1.0) / 2.0 * (high - low)
