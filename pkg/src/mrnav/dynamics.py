"""Differential-drive kinematics, control bounds, and the actuation-noise model.

Angles are radians wrapped to (-pi, pi]; positions are meters; a control is
(linear velocity m/s, angular velocity rad/s). The position update uses the
pre-step heading, so the realized world velocity of one step is exactly
v * (cos theta_t, sin theta_t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to the interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - angle, TWO_PI)


@dataclass
class AgentState:
    """Pose plus the world-frame velocity realized over the previous step."""

    px: float
    py: float
    theta: float
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        self.theta = float(wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.px, self.py])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta, self.vx, self.vy])


@dataclass
class ControlInput:
    v: float
    w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.w])


@dataclass
class ControlBounds:
    v_min: float = -1.0
    v_max: float = 1.0
    w_min: float = -2.0
    w_max: float = 2.0

    def __post_init__(self):
        if not (self.v_min < self.v_max and self.w_min < self.w_max):
            raise ValueError("control bounds must satisfy min < max")

    @property
    def low(self) -> np.ndarray:
        return np.array([self.v_min, self.w_min])

    @property
    def high(self) -> np.ndarray:
        return np.array([self.v_max, self.w_max])

    def clamp(self, u: ControlInput) -> ControlInput:
        return ControlInput(
            min(max(u.v, self.v_min), self.v_max),
            min(max(u.w, self.w_min), self.w_max),
        )

    def clamp_array(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.low, self.high)


@dataclass
class NoiseModel:
    """Zero-mean Gaussian actuation noise, Sigma = diag(sigma_v^2, sigma_w^2).

    Zero deviations are accepted (deterministic configurations); cost terms
    built on Sigma^-1 treat a zero coordinate as absent.
    """

    sigma_v: float = 0.1
    sigma_w: float = 0.2

    def __post_init__(self):
        if self.sigma_v < 0 or self.sigma_w < 0:
            raise ValueError("noise deviations must be nonnegative")

    @property
    def std(self) -> np.ndarray:
        return np.array([self.sigma_v, self.sigma_w])

    @property
    def cov_diag(self) -> np.ndarray:
        return np.array([self.sigma_v ** 2, self.sigma_w ** 2])


def step(state: AgentState, u: ControlInput, dt: float) -> AgentState:
    """Advance the kinematic model one step of length dt."""
    nx = state.px + dt * math.cos(state.theta) * u.v
    ny = state.py + dt * math.sin(state.theta) * u.v
    nth = float(wrap_angle(state.theta + dt * u.w))
    return AgentState(nx, ny, nth, (nx - state.px) / dt, (ny - state.py) / dt)


def affine_terms(state: AgentState, dt: float):
    """Pose-space affine decomposition: step(x, u, dt) == F(x) + G(x) @ u.

    The heading component of F + G @ u is unwrapped; step() additionally
    wraps it to (-pi, pi].
    """
    f = np.array([state.px, state.py, state.theta])
    g = np.array([
        [dt * math.cos(state.theta), 0.0],
        [dt * math.sin(state.theta), 0.0],
        [0.0, dt],
    ])
    return f, g


def perturb_and_clamp(u: ControlInput, noise: NoiseModel, bounds: ControlBounds,
                      rng: np.random.Generator) -> ControlInput:
    """Apply actuation noise and clamp to bounds; always draws two variates."""
    eps = rng.standard_normal(2) * noise.std
    return bounds.clamp(ControlInput(u.v + eps[0], u.w + eps[1]))
