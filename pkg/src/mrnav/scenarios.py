"""Deterministic, seeded generators for the evaluation scenarios.

Three families: agents on a circle with diametrically opposite goals, agents
on a square grid with permuted cell goals, and uniformly random placements in
a bounded area. A scenario serializes to a JSON document listing per-agent
start pose, goal, and radius.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import wrap_angle

DEFAULT_RADIUS = 0.3
_MIN_START_GAP = 0.1  # extra spacing beyond 2r for random starts


@dataclass
class AgentSpec:
    px: float
    py: float
    theta: float
    goal_x: float
    goal_y: float
    radius: float = DEFAULT_RADIUS

    @property
    def goal(self) -> np.ndarray:
        return np.array([self.goal_x, self.goal_y])


@dataclass
class Scenario:
    kind: str
    seed: int
    params: dict = field(default_factory=dict)
    agents: list[AgentSpec] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.agents)


def circle(n: int, diameter: float, seed: int = 0,
           radius: float = DEFAULT_RADIUS) -> Scenario:
    """Agents equidistant on a circle, goals at the antipodes, heading to goal."""
    if n < 1:
        raise ValueError("need at least one agent")
    if n * 2 * radius >= math.pi * diameter:
        raise ValueError(
            f"{n} agents of radius {radius} do not fit on a circle of "
            f"diameter {diameter}")
    r_circle = diameter / 2.0
    agents = []
    for i in range(n):
        ang = 2.0 * math.pi * i / n
        px, py = r_circle * math.cos(ang), r_circle * math.sin(ang)
        gx, gy = -px, -py
        theta = float(wrap_angle(math.atan2(gy - py, gx - px)))
        agents.append(AgentSpec(px, py, theta, gx, gy, radius))
    return Scenario("circle", seed, {"n": n, "diameter": diameter}, agents)


def _cell_centers(grid_n: int, cell_size: float) -> np.ndarray:
    offset = (grid_n - 1) / 2.0
    centers = [((i - offset) * cell_size, (j - offset) * cell_size)
               for i in range(grid_n) for j in range(grid_n)]
    return np.asarray(centers)


def mesh(grid_n: int, cell_size: float, n: int, seed: int = 0,
         radius: float = DEFAULT_RADIUS) -> Scenario:
    """Agents at grid-cell centers with goals a seeded permutation of the
    occupied cells; the permutation is re-drawn toward a derangement."""
    if n < 1:
        raise ValueError("need at least one agent")
    if n > grid_n * grid_n:
        raise ValueError(f"{n} agents exceed the {grid_n}x{grid_n} grid")
    rng = np.random.default_rng(seed)
    centers = _cell_centers(grid_n, cell_size)
    if n == grid_n * grid_n:
        occupied = np.arange(n)
    else:
        occupied = rng.choice(grid_n * grid_n, size=n, replace=False)
    perm = rng.permutation(n)
    if n > 1:
        for _ in range(100):
            if not np.any(perm == np.arange(n)):
                break
            perm = rng.permutation(n)
    agents = []
    for i in range(n):
        px, py = centers[occupied[i]]
        gx, gy = centers[occupied[perm[i]]]
        agents.append(AgentSpec(float(px), float(py), 0.0, float(gx), float(gy), radius))
    return Scenario("mesh", seed,
                    {"grid_n": grid_n, "cell_size": cell_size, "n": n}, agents)


def random_scene(n: int, area: float, seed: int = 0,
                 radius: float = DEFAULT_RADIUS,
                 max_rejections: int = 100_000) -> Scenario:
    """Uniform starts (pairwise separated) and independent uniform goals in a
    centered area x area square; headings uniform in (-pi, pi]."""
    if n < 1:
        raise ValueError("need at least one agent")
    rng = np.random.default_rng(seed)
    half = area / 2.0
    min_gap = 2 * radius + _MIN_START_GAP
    starts: list[np.ndarray] = []
    rejections = 0
    while len(starts) < n:
        cand = rng.uniform(-half, half, size=2)
        if all(np.hypot(*(cand - s)) >= min_gap for s in starts):
            starts.append(cand)
        else:
            rejections += 1
            if rejections > max_rejections:
                raise ValueError(
                    f"could not place {n} agents in a {area}x{area} area "
                    f"after {max_rejections} rejections")
    agents = []
    for i in range(n):
        gx, gy = rng.uniform(-half, half, size=2)
        theta = float(wrap_angle(rng.uniform(-math.pi, math.pi)))
        agents.append(AgentSpec(float(starts[i][0]), float(starts[i][1]),
                                theta, float(gx), float(gy), radius))
    return Scenario("random", seed, {"n": n, "area": area}, agents)


def save_scenario(scenario: Scenario, path) -> None:
    doc = {
        "kind": scenario.kind,
        "seed": scenario.seed,
        "params": scenario.params,
        "agents": [
            {"px": a.px, "py": a.py, "theta": a.theta,
             "goal": [a.goal_x, a.goal_y], "radius": a.radius}
            for a in scenario.agents
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    agents = [AgentSpec(a["px"], a["py"], a["theta"],
                        a["goal"][0], a["goal"][1], a["radius"])
              for a in doc["agents"]]
    return Scenario(doc["kind"], doc["seed"], doc.get("params", {}), agents)


def scenario_bytes(scenario: Scenario) -> bytes:
    """Canonical serialized form, used for determinism checks."""
    doc = {
        "kind": scenario.kind,
        "seed": scenario.seed,
        "params": scenario.params,
        "agents": [[a.px, a.py, a.theta, a.goal_x, a.goal_y, a.radius]
                   for a in scenario.agents],
    }
    return json.dumps(doc, sort_keys=True).encode()
