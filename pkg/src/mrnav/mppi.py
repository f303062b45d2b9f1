"""Sampling-based MPC machinery: rollout sampling around a per-step Gaussian
control distribution, cost evaluation, exponentiated-cost weighting, the
weighted-average update, and the receding-horizon shift.

Control sequences are (H, 2) float arrays of (v, w) rows; rollouts are kept
in batches (one array per field) so sampling and cost evaluation stay
vectorized over the rollout dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import AgentState, ControlBounds, NoiseModel, wrap_angle

POLICY_BRANCH = "policy"
MPPI_BRANCH = "mppi"


@dataclass
class MppiParams:
    horizon: int = 10
    n_samples: int = 1500
    n_policy_samples: int = 450
    lam: float = 0.05
    gamma: float = 0.002
    variance_scale: float = 1.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not 0 <= self.n_policy_samples <= self.n_samples:
            raise ValueError("policy sample count must lie in [0, n_samples]")
        if self.lam <= 0:
            raise ValueError("inverse temperature must be positive")
        if self.variance_scale < 0:
            raise ValueError("variance scale must be nonnegative")


@dataclass
class CostWeights:
    """Coefficients of the state-cost terms (artifact defaults)."""

    goal: float = 1.0
    proximity: float = 0.5
    proximity_floor: float = 0.05
    collision: float = 1000.0
    reverse: float = 5.0
    terminal: float = 10.0


@dataclass
class DistributionSequence:
    """Per-step Gaussian control distribution over the horizon."""

    means: np.ndarray  # (H, 2)
    stds: np.ndarray   # (H, 2)

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.stds = np.asarray(self.stds, dtype=float)
        if self.means.shape != self.stds.shape or self.means.ndim != 2:
            raise ValueError("means and stds must share an (H, 2) shape")
        if np.any(self.stds < 0):
            raise ValueError("stds must be nonnegative")

    def __len__(self):
        return self.means.shape[0]


@dataclass
class Rollout:
    controls: np.ndarray  # (H, 2)
    noise: np.ndarray     # (H, 2), deviation from the branch mean after clamping
    states: np.ndarray    # (H+1, 5) rows (px, py, theta, vx, vy)
    branch: str
    cost: float | None = None


@dataclass
class RolloutBatch:
    """Sequence of rollouts stored as stacked arrays."""

    controls: np.ndarray  # (K, H, 2)
    noise: np.ndarray     # (K, H, 2)
    states: np.ndarray    # (K, H+1, 5)
    branch: str

    def __len__(self):
        return self.controls.shape[0]

    def __getitem__(self, k) -> Rollout:
        return Rollout(self.controls[k], self.noise[k], self.states[k], self.branch)

    def __iter__(self):
        return (self[k] for k in range(len(self)))


def propagate_states(start: AgentState, controls: np.ndarray, dt: float) -> np.ndarray:
    """Vectorized kinematic rollout of (K, H, 2) control batches."""
    K, H = controls.shape[:2]
    states = np.empty((K, H + 1, 5))
    states[:, 0, :] = start.as_array()
    for t in range(H):
        px, py, th = states[:, t, 0], states[:, t, 1], states[:, t, 2]
        v, w = controls[:, t, 0], controls[:, t, 1]
        nx = px + dt * np.cos(th) * v
        ny = py + dt * np.sin(th) * v
        states[:, t + 1, 0] = nx
        states[:, t + 1, 1] = ny
        states[:, t + 1, 2] = wrap_angle(th + dt * w)
        states[:, t + 1, 3] = (nx - px) / dt
        states[:, t + 1, 4] = (ny - py) / dt
    return states


def sample_rollouts(dist: DistributionSequence, count: int, start: AgentState,
                    bounds: ControlBounds, rng: np.random.Generator, dt: float,
                    branch: str = MPPI_BRANCH) -> RolloutBatch:
    """Draw rollouts around the distribution; noise is the post-clamp deviation."""
    H = len(dist)
    if count == 0:
        return RolloutBatch(np.empty((0, H, 2)), np.empty((0, H, 2)),
                            np.empty((0, H + 1, 5)), branch)
    controls = rng.standard_normal((count, H, 2))
    controls *= dist.stds[None, :, :]
    controls += dist.means[None, :, :]
    np.clip(controls, bounds.low, bounds.high, out=controls)
    noise = controls - dist.means[None, :, :]
    states = propagate_states(start, controls, dt)
    return RolloutBatch(controls, noise, states, branch)


@dataclass
class CostContext:
    """Inputs of the rollout cost beyond the rollout itself."""

    goal: np.ndarray                     # (2,)
    nb_positions: np.ndarray             # (H+1, M, 2) predicted neighbor centers
    nb_radii: np.ndarray                 # (M,)
    self_radius: float
    weights: CostWeights = field(default_factory=CostWeights)
    branch_stds: dict = field(default_factory=dict)  # branch -> (H, 2) sampling stds

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=float)
        self.nb_positions = np.asarray(self.nb_positions, dtype=float)
        self.nb_radii = np.asarray(self.nb_radii, dtype=float)


def batch_costs(batch: RolloutBatch, ctx: CostContext, params: MppiParams,
                exec_noise: NoiseModel) -> np.ndarray:
    """Trajectory cost of every rollout in the batch.

    Running state terms are evaluated on the post-step states x_1..x_H
    against the neighbor predictions at the same indices; control terms run
    over t = 0..H-1; the terminal goal term is added at x_H.
    """
    if len(batch) == 0:
        return np.empty(0)
    w = ctx.weights
    states = batch.states
    pos = states[:, 1:, :2]                                   # (K, H, 2)
    gd = pos - ctx.goal
    d_goal = np.sqrt(gd[:, :, 0] ** 2 + gd[:, :, 1] ** 2)     # (K, H)
    cost = w.goal * d_goal.sum(axis=1)

    if ctx.nb_positions.size:
        # Running minima over neighbors with reused scratch buffers keep the
        # temporaries at (K, H): this is the planner's single largest workload.
        nb = ctx.nb_positions[1:]                             # (H, M, 2)
        touch2 = (ctx.self_radius + ctx.nb_radii) ** 2        # (M,)
        px = np.ascontiguousarray(pos[:, :, 0])
        py = np.ascontiguousarray(pos[:, :, 1])
        scratch = np.empty_like(px)
        d2 = np.empty_like(px)
        d2_min = np.full_like(px, np.inf)
        gap2_min = np.full_like(px, np.inf)
        for j in range(nb.shape[1]):
            np.subtract(px, nb[None, :, j, 0], out=d2)
            np.multiply(d2, d2, out=d2)
            np.subtract(py, nb[None, :, j, 1], out=scratch)
            np.multiply(scratch, scratch, out=scratch)
            d2 += scratch
            np.minimum(d2_min, d2, out=d2_min)
            d2 -= touch2[j]
            np.minimum(gap2_min, d2, out=gap2_min)
        np.sqrt(d2_min, out=d2_min)                           # (K, H)
        np.maximum(d2_min, w.proximity_floor, out=d2_min)
        np.divide(1.0, d2_min, out=d2_min)
        cost += w.proximity * d2_min.sum(axis=1)
        cost += w.collision * (gap2_min < 0.0).sum(axis=1)

    u = batch.controls
    eps = batch.noise
    cost += w.reverse * np.maximum(0.0, -u[:, :, 0]).sum(axis=1)

    mean = u - eps
    sig2 = exec_noise.cov_diag
    inv_sig = np.divide(1.0, sig2, out=np.zeros(2), where=sig2 > 0)
    quad = (mean * mean * inv_sig).sum(axis=(1, 2))
    cross = (mean * eps * inv_sig).sum(axis=(1, 2))
    cost += 0.5 * params.gamma * (quad + 2.0 * cross)

    std = np.asarray(ctx.branch_stds.get(batch.branch))
    if std is None or std.shape != eps.shape[1:]:
        raise ValueError(f"cost context lacks sampling stds for branch {batch.branch!r}")
    # Importance correction for sampling variance != execution variance;
    # coordinates with zero sampling or execution deviation contribute nothing.
    ok = (std > 0) & (sig2[None, :] > 0)
    inv_std2 = np.divide(1.0, std * std, out=np.zeros_like(std), where=std > 0)
    factor = np.where(ok, inv_sig[None, :] - inv_std2, 0.0)
    cost += 0.5 * params.lam * (eps * eps * factor[None]).sum(axis=(1, 2))

    td = states[:, -1, :2] - ctx.goal
    cost += w.terminal * np.sqrt(td[:, 0] ** 2 + td[:, 1] ** 2)
    return cost


def rollout_cost(r: Rollout, ctx: CostContext, params: MppiParams,
                 exec_noise: NoiseModel) -> float:
    """Cost of a single rollout (delegates to the batched evaluation)."""
    batch = RolloutBatch(r.controls[None], r.noise[None], r.states[None], r.branch)
    return float(batch_costs(batch, ctx, params, exec_noise)[0])


def weights(costs, lam: float) -> np.ndarray:
    """Exponentiated-cost weights, stabilized by subtracting the minimum."""
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValueError("weights need at least one cost")
    shifted = np.exp(-(c - c.min()) / lam)
    return shifted / shifted.sum()


def weighted_update(rollouts, w, bounds: ControlBounds) -> np.ndarray:
    """Per-timestep convex combination of rollout controls, clamped to bounds.

    Accepts a RolloutBatch, a sequence of Rollout, or a raw (K, H, 2) array.
    """
    w = np.asarray(w, dtype=float)
    if isinstance(rollouts, RolloutBatch):
        controls = rollouts.controls
    elif isinstance(rollouts, np.ndarray):
        controls = rollouts
    else:
        controls = np.stack([r.controls for r in rollouts])
    if controls.shape[0] != w.shape[0]:
        raise ValueError("rollout and weight counts differ")
    u_star = np.einsum("k,khc->hc", w, controls)
    return np.clip(u_star, bounds.low, bounds.high)


def shift(u_star: np.ndarray) -> np.ndarray:
    """Receding-horizon shift: drop the first control, repeat the last."""
    u_star = np.asarray(u_star, dtype=float)
    return np.concatenate([u_star[1:], u_star[-1:]], axis=0)
