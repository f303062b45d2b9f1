"""Holonomic reciprocal-avoidance baseline tracked by the differential drive.

The robot is replaced by an enlarged disk centered on a tracking point ahead
of the wheel axle; the classic incremental two-dimensional linear program
picks the feasible holonomic velocity closest to a jittered preferred
velocity, which then maps back to (v, w) through the tracking-point algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AgentState, ControlBounds, ControlInput
from .orca import orca_line

_EPS = 1e-12


@dataclass
class OrcaDDConfig:
    tracking_offset: float = 0.3
    goal_jitter_std: float = 0.3
    preferred_speed: float = 1.0
    tau: float = 2.0
    radius_buffer: float = 0.01

    def __post_init__(self):
        if self.tracking_offset <= 0:
            raise ValueError("tracking offset must be positive")


@dataclass
class _Line:
    point: np.ndarray
    direction: np.ndarray


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _lp1(lines, index, radius, opt, direction_opt):
    """Optimize along line `index` inside the speed disc and prior half-planes."""
    line = lines[index]
    dot = float(line.point @ line.direction)
    disc = dot * dot + radius * radius - float(line.point @ line.point)
    if disc < 0.0:
        return None
    sqrt_disc = math.sqrt(disc)
    t_left, t_right = -dot - sqrt_disc, -dot + sqrt_disc
    for prev in lines[:index]:
        denom = _det(line.direction, prev.direction)
        numer = _det(prev.direction, line.point - prev.point)
        if abs(denom) < _EPS:
            if numer < 0.0:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None
    if direction_opt:
        t = t_right if float(opt @ line.direction) > 0.0 else t_left
    else:
        t = float(line.direction @ (opt - line.point))
        t = min(max(t, t_left), t_right)
    return line.point + t * line.direction


def _lp2(lines, radius, opt, direction_opt):
    """Feasible velocity closest to opt (or farthest along it); returns
    (velocity, index of the first infeasible line or len(lines))."""
    if direction_opt:
        result = opt * radius
    else:
        speed = math.hypot(opt[0], opt[1])
        result = opt * (radius / speed) if speed > radius else opt.copy()
    for i, line in enumerate(lines):
        if _det(line.direction, result - line.point) < 0.0:
            candidate = _lp1(lines, i, radius, opt, direction_opt)
            if candidate is None:
                return result, i
            result = candidate
    return result, len(lines)


def _lp3(lines, begin, radius, result):
    """Least-violation fallback when the half-plane intersection is empty."""
    distance = 0.0
    for i in range(begin, len(lines)):
        line = lines[i]
        if _det(line.direction, result - line.point) < distance:
            projected = []
            for prev in lines[:i]:
                denom = _det(line.direction, prev.direction)
                if abs(denom) < _EPS:
                    if float(line.direction @ prev.direction) > 0.0:
                        continue
                    point = 0.5 * (line.point + prev.point)
                else:
                    t = _det(prev.direction, line.point - prev.point) / denom
                    point = line.point + t * line.direction
                direction = prev.direction - line.direction
                norm = math.hypot(direction[0], direction[1])
                if norm < _EPS:
                    continue
                projected.append(_Line(point, direction / norm))
            opt_dir = np.array([-line.direction[1], line.direction[0]])
            candidate, failed = _lp2(projected, radius, opt_dir, direction_opt=True)
            if failed == len(projected):
                result = candidate
            distance = _det(line.direction, result - line.point)
    return result


def solve_velocity_lp(lines, radius, opt_vel):
    """Holonomic ORCA velocity selection with the standard fallback."""
    result, failed = _lp2(lines, radius, np.asarray(opt_vel, dtype=float),
                          direction_opt=False)
    if failed < len(lines):
        result = _lp3(lines, failed, radius, result)
    return result


def orca_dd_command(self_state: AgentState, goal, tracks, cfg: OrcaDDConfig,
                    self_radius: float, bounds: ControlBounds, dt: float,
                    rng: np.random.Generator) -> ControlInput:
    """One control step of the enlarged-disk reciprocal-avoidance baseline."""
    d = cfg.tracking_offset
    heading = np.array([math.cos(self_state.theta), math.sin(self_state.theta)])
    track_point = self_state.position + d * heading
    self_vel = self_state.velocity

    lines = []
    for track in tracks:
        p_rel = track.position - track_point
        v_rel = self_vel - track.velocity
        # Both disks enlarged by the tracking offset; buffer on each side.
        combined = (self_radius + d) + (track.radius + d) + 2 * cfg.radius_buffer
        offset, direction = orca_line(p_rel, v_rel, combined, cfg.tau, dt, 0.5)
        lines.append(_Line(self_vel + np.asarray(offset), np.asarray(direction)))

    to_goal = np.asarray(goal, dtype=float) - self_state.position
    dist = math.hypot(to_goal[0], to_goal[1])
    direction = to_goal / dist if dist > _EPS else np.zeros(2)
    direction = direction + rng.standard_normal(2) * cfg.goal_jitter_std
    norm = math.hypot(direction[0], direction[1])
    if norm > _EPS:
        direction = direction / norm
    pref_vel = direction * min(cfg.preferred_speed, dist / 1.0)

    max_speed = math.hypot(bounds.v_max, d * max(abs(bounds.w_min), bounds.w_max))
    chosen = solve_velocity_lp(lines, max_speed, pref_vel)

    v = float(chosen @ heading)
    w = float((-chosen[0] * heading[1] + chosen[1] * heading[0]) / d)
    return bounds.clamp(ControlInput(v, w))
