"""Guidance-policy interface: egocentric observations, portable MLP weights
with built-in inference, and a scripted proxy policy.

The policy consumes a normalized observation (goal distance/bearing plus k
nearest-neighbor slots) and returns per-step control distribution
parameters. Weights travel in a self-describing JSON document so trained
policies can be produced by any external trainer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import AgentState, ControlBounds, ControlInput, wrap_angle

WEIGHTS_FORMAT_VERSION = 1
_ACTIVATIONS = ("tanh", "relu", "linear")
_STD_FLOOR = 1e-3


class WeightsFormatError(ValueError):
    """Raised when a policy weights document fails schema validation."""


@dataclass
class Observation:
    """Normalized egocentric features; neighbor rows are (dist, angle, present)."""

    goal_dist: float
    goal_angle: float
    neighbors: np.ndarray  # (k, 3)
    sense_range: float = 10.0

    def __post_init__(self):
        self.neighbors = np.asarray(self.neighbors, dtype=float)

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.goal_dist, self.goal_angle],
                               self.neighbors.ravel()])


@dataclass
class PolicyOutput:
    mean: ControlInput
    std: np.ndarray

    def __post_init__(self):
        self.std = np.asarray(self.std, dtype=float)


@dataclass
class Layer:
    rows: int
    cols: int
    w: np.ndarray  # (rows, cols)
    b: np.ndarray  # (cols,)
    act: str


@dataclass
class PolicyWeights:
    format_version: int
    k_neighbors: int
    sense_range: float
    action_low: np.ndarray
    action_high: np.ndarray
    log_std: np.ndarray
    layers: list[Layer] = field(default_factory=list)


def build_observation(self_state: AgentState, goal, neighbor_positions,
                      k: int, sense_range: float) -> Observation:
    """Observation from the agent's pose, its goal, and neighbor centers.

    Distances are divided by the sensing range and clipped to 1; angles are
    egocentric bearings divided by pi. Neighbors beyond the sensing range are
    excluded before the k nearest are selected; empty slots read (1, 0, 0).
    """
    if k < 0:
        raise ValueError("neighbor slot count must be nonnegative")
    goal = np.asarray(goal, dtype=float)
    dx, dy = goal[0] - self_state.px, goal[1] - self_state.py
    goal_dist = min(math.hypot(dx, dy) / sense_range, 1.0)
    goal_angle = float(wrap_angle(math.atan2(dy, dx) - self_state.theta)) / math.pi

    slots = np.tile(np.array([1.0, 0.0, 0.0]), (k, 1))
    visible = []
    for pos in neighbor_positions:
        ndx, ndy = pos[0] - self_state.px, pos[1] - self_state.py
        dist = math.hypot(ndx, ndy)
        if dist > sense_range:
            continue
        angle = float(wrap_angle(math.atan2(ndy, ndx) - self_state.theta)) / math.pi
        visible.append((dist, angle))
    visible.sort(key=lambda item: item[0])
    for i, (dist, angle) in enumerate(visible[:k]):
        slots[i] = (min(dist / sense_range, 1.0), angle, 1.0)
    return Observation(goal_dist, goal_angle, slots, sense_range)


def mlp_infer(weights: PolicyWeights, obs: Observation) -> PolicyOutput:
    """Forward pass producing a squashed mean and a floored global std."""
    x = obs.vector()
    if x.shape[0] != weights.layers[0].rows:
        raise WeightsFormatError(
            f"observation has {x.shape[0]} features but the first layer "
            f"expects {weights.layers[0].rows}")
    for layer in weights.layers:
        x = x @ layer.w + layer.b
        if layer.act == "tanh":
            x = np.tanh(x)
        elif layer.act == "relu":
            x = np.maximum(x, 0.0)
    span = weights.action_high - weights.action_low
    mean = weights.action_low + (np.tanh(x) + 1.0) / 2.0 * span
    std = np.maximum(np.exp(weights.log_std) * span / 2.0, _STD_FLOOR)
    return PolicyOutput(ControlInput(float(mean[0]), float(mean[1])), std)


def proxy_policy(obs: Observation, bounds: ControlBounds) -> PolicyOutput:
    """Scripted goal-seeking policy with a fixed neighbor-avoidance swerve.

    Steers toward the goal bearing; when the nearest neighbor is closer than
    0.15 (normalized) the bearing is biased by pi/3 away from the neighbor's
    side (ties break positive). Deterministic in the observation.
    """
    bearing = obs.goal_angle * math.pi
    present = obs.neighbors[:, 2] > 0.5
    if present.any():
        nearest = int(np.flatnonzero(present)[np.argmin(obs.neighbors[present, 0])])
        n_dist, n_angle = obs.neighbors[nearest, 0], obs.neighbors[nearest, 1]
        if n_dist < 0.15:
            bearing += -math.pi / 3.0 if n_angle > 0 else math.pi / 3.0
    v = (bounds.v_max * max(0.0, math.cos(bearing))
         * min(1.0, obs.goal_dist * obs.sense_range / 1.0))
    w = 2.5 * bearing
    mean = bounds.clamp(ControlInput(v, w))
    std = np.array([0.15 * (bounds.v_max - bounds.v_min) / 2.0,
                    0.15 * (bounds.w_max - bounds.w_min) / 2.0])
    return PolicyOutput(mean, std)


def _round_sig(x: float, digits: int = 9) -> float:
    return float(f"{float(x):.{digits}g}")


def save_weights(weights: PolicyWeights, path) -> None:
    """Write the JSON weights document (decimals at 9 significant digits)."""
    doc = {
        "format_version": weights.format_version,
        "k_neighbors": weights.k_neighbors,
        "sense_range": _round_sig(weights.sense_range),
        "action_low": [_round_sig(x) for x in weights.action_low],
        "action_high": [_round_sig(x) for x in weights.action_high],
        "log_std": [_round_sig(x) for x in weights.log_std],
        "layers": [
            {
                "rows": layer.rows,
                "cols": layer.cols,
                "w": [_round_sig(x) for x in np.asarray(layer.w).ravel()],
                "b": [_round_sig(x) for x in np.asarray(layer.b)],
                "act": layer.act,
            }
            for layer in weights.layers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise WeightsFormatError(f"{where}: missing field '{key}'")
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise WeightsFormatError(
            f"{where}: field '{key}' must be {getattr(kind, '__name__', kind)}")
    return value


def _vector(doc: dict, key: str, length: int, where: str) -> np.ndarray:
    raw = _require(doc, key, list, where)
    if len(raw) != length or not all(isinstance(x, (int, float)) for x in raw):
        raise WeightsFormatError(f"{where}: field '{key}' must hold {length} numbers")
    return np.asarray(raw, dtype=float)


def load_weights(path) -> PolicyWeights:
    """Load and validate a policy weights document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WeightsFormatError(f"{path}: not a valid weights document ({exc})")
    if not isinstance(doc, dict):
        raise WeightsFormatError(f"{path}: top level must be an object")

    version = _require(doc, "format_version", int, str(path))
    if version != WEIGHTS_FORMAT_VERSION:
        raise WeightsFormatError(
            f"{path}: unsupported format_version {version} "
            f"(expected {WEIGHTS_FORMAT_VERSION})")
    k = _require(doc, "k_neighbors", int, str(path))
    if k < 0:
        raise WeightsFormatError(f"{path}: k_neighbors must be nonnegative")
    sense_range = float(_require(doc, "sense_range", (int, float), str(path)))
    low = _vector(doc, "action_low", 2, str(path))
    high = _vector(doc, "action_high", 2, str(path))
    log_std = _vector(doc, "log_std", 2, str(path))
    raw_layers = _require(doc, "layers", list, str(path))
    if not raw_layers:
        raise WeightsFormatError(f"{path}: layers must be a non-empty list")

    layers = []
    expected_rows = 2 + 3 * k
    for i, entry in enumerate(raw_layers):
        where = f"{path}: layers[{i}]"
        if not isinstance(entry, dict):
            raise WeightsFormatError(f"{where}: must be an object")
        rows = _require(entry, "rows", int, where)
        cols = _require(entry, "cols", int, where)
        act = _require(entry, "act", str, where)
        if act not in _ACTIVATIONS:
            raise WeightsFormatError(
                f"{where}: unknown activation '{act}' (expected one of {_ACTIVATIONS})")
        if rows != expected_rows:
            raise WeightsFormatError(
                f"{where}: expected {expected_rows} input rows, got {rows}")
        w = _vector(entry, "w", rows * cols, where).reshape(rows, cols)
        b = _vector(entry, "b", cols, where)
        layers.append(Layer(rows, cols, w, b, act))
        expected_rows = cols
    if layers[-1].cols != 2:
        raise WeightsFormatError(
            f"{path}: final layer must output 2 values, got {layers[-1].cols}")
    return PolicyWeights(version, k, sense_range, low, high, log_std, layers)
