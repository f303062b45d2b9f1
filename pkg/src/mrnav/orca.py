"""Reciprocal velocity-obstacle half-planes and their control-space reduction.

Per visible neighbor, the half-plane n . v <= b in world-velocity space keeps
the pair at least their combined radius apart for the avoidance horizon when
both agents pick velocities in their respective half-planes. For the
differential drive, the one-step realized world velocity is v * heading, so
the half-plane reduces to a linear constraint on the linear-velocity
coordinate with the heading frozen at its current value.

The geometry is deliberately written in scalar arithmetic: it sits inside the
planner's per-step, per-neighbor loop where array allocation dominates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import AgentState

_EPS = 1e-12


@dataclass
class Neighbor:
    """Relative position (p_j - p_i), world velocity, and disk radius."""

    rel_px: float
    rel_py: float
    vel_x: float
    vel_y: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("neighbor radius must be positive")


@dataclass
class OrcaParams:
    tau: float = 2.0
    reciprocity: float = 0.5
    radius_buffer: float = 0.01

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("avoidance horizon must be positive")
        if not 0.0 < self.reciprocity <= 1.0:
            raise ValueError("reciprocity share must lie in (0, 1]")


@dataclass
class HalfPlaneConstraint:
    """Linear constraint a @ (v, w) <= b on the control vector."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.shape != (2,) or not np.all(np.isfinite(self.a)):
            raise ValueError("constraint coefficients must be a finite 2-vector")


def orca_line(p_rel, v_rel, combined_radius, tau, dt, share):
    """Boundary point offset and direction of the ORCA half-plane.

    p_rel is p_j - p_i, v_rel is v_i - v_j (any indexable pairs). The
    half-plane line passes through v_self + offset along `direction`;
    feasible velocities lie to its left. Returns (offset, direction) as
    2-tuples of floats.
    """
    px, py = float(p_rel[0]), float(p_rel[1])
    vx, vy = float(v_rel[0]), float(v_rel[1])
    dist_sq = px * px + py * py
    r_sq = combined_radius * combined_radius

    if dist_sq > r_sq:
        inv_t = 1.0 / tau
        wx, wy = vx - inv_t * px, vy - inv_t * py
        w_sq = wx * wx + wy * wy
        dot = wx * px + wy * py
        if dot < 0.0 and dot * dot > r_sq * w_sq:
            # Closest boundary point lies on the truncation arc.
            w_len = math.sqrt(w_sq)
            ux, uy = wx / w_len, wy / w_len
            direction = (uy, -ux)
            scale = combined_radius * inv_t - w_len
            u_adj = (scale * ux, scale * uy)
        else:
            # Closest boundary point lies on one of the cone legs.
            leg = math.sqrt(max(dist_sq - r_sq, 0.0))
            if px * wy - py * wx > 0.0:
                direction = ((px * leg - py * combined_radius) / dist_sq,
                             (px * combined_radius + py * leg) / dist_sq)
            else:
                direction = (-(px * leg + py * combined_radius) / dist_sq,
                             -(-px * combined_radius + py * leg) / dist_sq)
            along = vx * direction[0] + vy * direction[1]
            u_adj = (along * direction[0] - vx, along * direction[1] - vy)
    else:
        # Already overlapping: push apart within one time step.
        inv_dt = 1.0 / dt
        wx, wy = vx - inv_dt * px, vy - inv_dt * py
        w_len = math.sqrt(wx * wx + wy * wy)
        if w_len > _EPS:
            ux, uy = wx / w_len, wy / w_len
        elif dist_sq > _EPS:
            d = math.sqrt(dist_sq)
            ux, uy = -px / d, -py / d
        else:
            ux, uy = 1.0, 0.0
        direction = (uy, -ux)
        scale = combined_radius * inv_dt - w_len
        u_adj = (scale * ux, scale * uy)

    return (share * u_adj[0], share * u_adj[1]), direction


def velocity_halfplane(self_state: AgentState, self_vel, nb: Neighbor,
                       params: OrcaParams, dt: float, self_radius: float):
    """Half-plane (n, b) with n a unit vector: feasible iff n @ v <= b."""
    combined = self_radius + nb.radius + 2.0 * params.radius_buffer
    if combined <= 0:
        raise ValueError("combined radius must be positive")
    svx, svy = float(self_vel[0]), float(self_vel[1])
    offset, direction = orca_line(
        (nb.rel_px, nb.rel_py), (svx - nb.vel_x, svy - nb.vel_y),
        combined, params.tau, dt, params.reciprocity)
    point = (svx + offset[0], svy + offset[1])
    nx, ny = direction[1], -direction[0]
    return np.array([nx, ny]), nx * point[0] + ny * point[1]


def to_control_constraint(hp, self_state: AgentState) -> HalfPlaneConstraint:
    """Reduce a velocity half-plane to the control vector with frozen heading.

    The realized step velocity is v * (cos theta, sin theta), so only the
    linear-velocity coordinate is constrained.
    """
    n, b = hp
    a0 = float(n[0]) * math.cos(self_state.theta) + \
        float(n[1]) * math.sin(self_state.theta)
    return HalfPlaneConstraint(np.array([a0, 0.0]), b)


def constraints_for_agent(self_state: AgentState, self_vel,
                          neighbors: list[Neighbor], params: OrcaParams,
                          dt: float, self_radius: float) -> list[HalfPlaneConstraint]:
    """One control constraint per neighbor; vacuous constraints are dropped.

    A constraint is vacuous when the heading is (numerically) orthogonal to
    the half-plane normal, leaving nothing to constrain this step.
    """
    svx, svy = float(self_vel[0]), float(self_vel[1])
    cos_t, sin_t = math.cos(self_state.theta), math.sin(self_state.theta)
    extra = 2.0 * params.radius_buffer
    out = []
    for nb in neighbors:
        combined = self_radius + nb.radius + extra
        if combined <= 0:
            raise ValueError("combined radius must be positive")
        offset, direction = orca_line(
            (nb.rel_px, nb.rel_py), (svx - nb.vel_x, svy - nb.vel_y),
            combined, params.tau, dt, params.reciprocity)
        nx, ny = direction[1], -direction[0]
        a0 = nx * cos_t + ny * sin_t
        if abs(a0) < _EPS:
            continue
        b = nx * (svx + offset[0]) + ny * (svy + offset[1])
        out.append(HalfPlaneConstraint(np.array([a0, 0.0]), b))
    return out
