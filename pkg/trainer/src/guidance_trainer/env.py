"""Lightweight multi-agent navigation environment for policy training.

Deliberately self-contained: dynamics, observations, and rewards are
re-implemented here rather than imported from the planner stack, and a golden
transition fixture (states, observations, rewards produced by that stack)
keeps the two implementations in lockstep.

Observation layout per agent (all normalized):
  [goal_dist, goal_angle, (dist, angle, present) x k]
with distances divided by the sensing range (clipped to 1), bearings taken
egocentrically and divided by pi, neighbor slots sorted by true distance and
padded with (1, 0, 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle to (-pi, pi]."""
    return np.pi - np.mod(np.pi - angle, TWO_PI)


@dataclass
class EnvConfig:
    scenario: str = "mesh-sparse"   # mesh-sparse | circle14 | circle20
    n_agents: int = 4
    episode_length: int = 300
    dt: float = 0.1
    radius: float = 0.3
    goal_tolerance: float = 0.3
    k_neighbors: int = 8
    sense_range: float = 10.0
    v_min: float = -1.0
    v_max: float = 1.0
    w_min: float = -2.0
    w_max: float = 2.0

    @property
    def obs_dim(self) -> int:
        return 2 + 3 * self.k_neighbors

    @property
    def action_low(self) -> np.ndarray:
        return np.array([self.v_min, self.w_min])

    @property
    def action_high(self) -> np.ndarray:
        return np.array([self.v_max, self.w_max])


def reward_terms(prev_dist, next_dist, on_goal, colliding):
    """Per-step reward: goal bonus minus collision penalty plus progress."""
    r = 0.5 * (prev_dist - next_dist)
    if on_goal:
        r += 0.2
    if colliding:
        r -= 1.0
    return r


def compute_reward(prev_pos, next_pos, goal, neighbor_next_positions,
                   neighbor_radii, self_radius, goal_tolerance=0.3):
    """Reward of one agent transition; neighbor positions are post-step."""
    prev_dist = math.hypot(prev_pos[0] - goal[0], prev_pos[1] - goal[1])
    next_dist = math.hypot(next_pos[0] - goal[0], next_pos[1] - goal[1])
    on_goal = next_dist <= goal_tolerance
    colliding = False
    for pos, rad in zip(neighbor_next_positions, neighbor_radii):
        if math.hypot(next_pos[0] - pos[0], next_pos[1] - pos[1]) < self_radius + rad:
            colliding = True
            break
    return reward_terms(prev_dist, next_dist, on_goal, colliding)


def build_observation(state, goal, neighbor_positions, k, sense_range):
    """Normalized egocentric observation vector (2 + 3k,)."""
    px, py, theta = state[0], state[1], state[2]
    dx, dy = goal[0] - px, goal[1] - py
    goal_dist = min(math.hypot(dx, dy) / sense_range, 1.0)
    goal_angle = float(wrap_angle(math.atan2(dy, dx) - theta)) / math.pi
    visible = []
    for pos in neighbor_positions:
        ndx, ndy = pos[0] - px, pos[1] - py
        dist = math.hypot(ndx, ndy)
        if dist > sense_range:
            continue
        angle = float(wrap_angle(math.atan2(ndy, ndx) - theta)) / math.pi
        visible.append((dist, angle))
    visible.sort(key=lambda item: item[0])
    out = np.empty(2 + 3 * k)
    out[0], out[1] = goal_dist, goal_angle
    for i in range(k):
        if i < len(visible):
            out[2 + 3 * i] = min(visible[i][0] / sense_range, 1.0)
            out[3 + 3 * i] = visible[i][1]
            out[4 + 3 * i] = 1.0
        else:
            out[2 + 3 * i] = 1.0
            out[3 + 3 * i] = 0.0
            out[4 + 3 * i] = 0.0
    return out


def _mesh_sparse(n, grid_n, cell_size, rng):
    offset = (grid_n - 1) / 2.0
    centers = np.array([((i - offset) * cell_size, (j - offset) * cell_size)
                        for i in range(grid_n) for j in range(grid_n)])
    occupied = rng.choice(grid_n * grid_n, size=n, replace=False)
    perm = rng.permutation(n)
    if n > 1:
        for _ in range(100):
            if not np.any(perm == np.arange(n)):
                break
            perm = rng.permutation(n)
    starts = centers[occupied]
    goals = centers[occupied[perm]]
    thetas = np.zeros(n)
    return starts, goals, thetas


def _circle(n, diameter):
    r = diameter / 2.0
    angles = 2 * np.pi * np.arange(n) / n
    starts = np.stack([r * np.cos(angles), r * np.sin(angles)], axis=1)
    goals = -starts
    thetas = wrap_angle(np.arctan2(goals[:, 1] - starts[:, 1],
                                   goals[:, 0] - starts[:, 0]))
    return starts, goals, thetas


class NavEnv:
    """Synchronous multi-agent environment; episodes never terminate early."""

    def __init__(self, cfg: EnvConfig, seed: int = 0):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.states = None   # (N, 3): px, py, theta
        self.goals = None    # (N, 2)
        self.t = 0

    def reset(self):
        cfg = self.cfg
        if cfg.scenario == "mesh-sparse":
            starts, goals, thetas = _mesh_sparse(cfg.n_agents, 6, 2.0, self.rng)
        elif cfg.scenario == "circle14":
            starts, goals, thetas = _circle(cfg.n_agents, 14.0)
        elif cfg.scenario == "circle20":
            starts, goals, thetas = _circle(cfg.n_agents, 20.0)
        else:
            raise ValueError(f"unknown scenario preset {self.cfg.scenario!r}")
        self.states = np.concatenate([starts, thetas[:, None]], axis=1)
        self.goals = goals
        self.t = 0
        return self._observations()

    def _observations(self):
        cfg = self.cfg
        obs = np.empty((cfg.n_agents, cfg.obs_dim))
        for i in range(cfg.n_agents):
            others = np.delete(self.states[:, :2], i, axis=0)
            obs[i] = build_observation(self.states[i], self.goals[i], others,
                                       cfg.k_neighbors, cfg.sense_range)
        return obs

    def step(self, actions):
        """Apply clamped actions simultaneously; returns (obs, rewards, done)."""
        cfg = self.cfg
        actions = np.clip(actions, cfg.action_low, cfg.action_high)
        prev = self.states.copy()
        theta = prev[:, 2]
        nxt = np.empty_like(prev)
        nxt[:, 0] = prev[:, 0] + cfg.dt * np.cos(theta) * actions[:, 0]
        nxt[:, 1] = prev[:, 1] + cfg.dt * np.sin(theta) * actions[:, 0]
        nxt[:, 2] = wrap_angle(theta + cfg.dt * actions[:, 1])
        self.states = nxt
        self.t += 1

        rewards = np.empty(cfg.n_agents)
        for i in range(cfg.n_agents):
            others = np.delete(nxt[:, :2], i, axis=0)
            rewards[i] = compute_reward(
                prev[i, :2], nxt[i, :2], self.goals[i], others,
                np.full(cfg.n_agents - 1, cfg.radius), cfg.radius,
                cfg.goal_tolerance)
        done = self.t >= cfg.episode_length
        return self._observations(), rewards, done


class VecNavEnv:
    """A batch of independent environments stepped together in one process."""

    def __init__(self, cfg: EnvConfig, n_envs: int, seed: int = 0):
        self.envs = [NavEnv(cfg, seed=seed + 1000 * i) for i in range(n_envs)]
        self.cfg = cfg
        self.n_envs = n_envs

    @property
    def n_streams(self) -> int:
        return self.n_envs * self.cfg.n_agents

    def reset(self):
        return np.concatenate([env.reset() for env in self.envs])

    def step(self, actions):
        n = self.cfg.n_agents
        all_obs, all_rew, dones = [], [], []
        for i, env in enumerate(self.envs):
            obs, rew, done = env.step(actions[i * n:(i + 1) * n])
            if done:
                obs = env.reset()
            all_obs.append(obs)
            all_rew.append(rew)
            dones.append(done)
        return (np.concatenate(all_obs), np.concatenate(all_rew),
                np.array(dones))
