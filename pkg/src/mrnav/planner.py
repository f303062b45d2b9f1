"""Receding-horizon planning step: constant-velocity neighbor prediction,
dual nominal branches (previous-solution branch and guidance-policy branch),
chance-constrained projection of both sampling distributions over the safety
horizon, mixed rollout sampling, cost weighting, and command emission.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mppi
from .dynamics import AgentState, ControlBounds, ControlInput, NoiseModel, step
from .mppi import (CostContext, CostWeights, DistributionSequence, MppiParams,
                   MPPI_BRANCH, POLICY_BRANCH)
from .orca import Neighbor, OrcaParams, constraints_for_agent
from .policy import PolicyWeights, build_observation, mlp_infer, proxy_policy
from .projection import (GaussianControl, INFEASIBLE_FALLBACK,
                         SafetyLevels, project)

PROXY_POLICY = "proxy"


@dataclass
class NeighborTrack:
    """Observed neighbor snapshot used for constant-velocity prediction."""

    position: np.ndarray
    velocity: np.ndarray
    radius: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.radius <= 0:
            raise ValueError("track radius must be positive")


@dataclass
class PlannerConfig:
    mppi: MppiParams = field(default_factory=MppiParams)
    h_safe: int = 10
    orca: OrcaParams = field(default_factory=OrcaParams)
    levels: SafetyLevels = field(default_factory=SafetyLevels)
    costs: CostWeights = field(default_factory=CostWeights)
    bounds: ControlBounds = field(default_factory=ControlBounds)
    noise: NoiseModel = field(default_factory=NoiseModel)
    radius: float = 0.3
    planner_dt: float = 0.1
    policy: object = None  # None | "proxy" | PolicyWeights
    k_neighbors: int = 8
    sense_range: float = 10.0
    use_safety: bool = True
    # Sampling-deviation floor for projected branches, as a fraction of the
    # execution noise. Without it the bound rows collapse the std of a
    # bound-saturated mean to zero and the receding-horizon loop freezes
    # (no sample diversity left to move the mean). Safety rows always win:
    # the floor is released when it would make them infeasible.
    std_floor_frac: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 1 <= self.h_safe <= self.mppi.horizon:
            raise ValueError(
                f"h_safe must lie in [1, {self.mppi.horizon}], got {self.h_safe}")
        if self.policy in (None, "none") and self.mppi.n_policy_samples > 0:
            raise ValueError("policy=none forces the policy sample count to 0")
        if isinstance(self.policy, str) and self.policy not in ("none", PROXY_POLICY):
            raise ValueError(f"unknown policy spec {self.policy!r}")


@dataclass
class PlanDiagnostics:
    projection_statuses: dict
    infeasible_steps: dict
    min_predicted_neighbor_dist: float | None
    branch_samples: dict
    first_step_dists: dict
    first_step_constraints: list


@dataclass
class PlanResult:
    command: ControlInput
    next_init: np.ndarray  # (H, 2)
    diagnostics: PlanDiagnostics


def bootstrap_sequence(horizon: int) -> np.ndarray:
    """All-zero control sequence used at episode start."""
    return np.zeros((horizon, 2))


def predict_neighbors(tracks: list[NeighborTrack], horizon: int, dt: float) -> np.ndarray:
    """Constant-velocity predictions; entry t holds every center at step t."""
    out = np.empty((horizon + 1, len(tracks), 2))
    for j, track in enumerate(tracks):
        steps = np.arange(horizon + 1)[:, None] * dt
        out[:, j, :] = track.position[None, :] + steps * track.velocity[None, :]
    return out


def resolve_policy(cfg: PlannerConfig):
    """Return (callable obs -> PolicyOutput, k, sense_range) or None."""
    if cfg.policy in (None, "none"):
        return None
    if cfg.policy == PROXY_POLICY:
        return (lambda obs: proxy_policy(obs, cfg.bounds),
                cfg.k_neighbors, cfg.sense_range)
    if isinstance(cfg.policy, PolicyWeights):
        weights = cfg.policy
        return (lambda obs: mlp_infer(weights, obs),
                weights.k_neighbors, weights.sense_range)
    raise ValueError(f"unknown policy spec {cfg.policy!r}")


def _project_branch(state, nominal_mean, nominal_std, nb_centers, tracks, cfg):
    """Chance-project one branch step against its own predicted state.

    Returns (mean (2,), std (2,), status or None, constraints). With no
    applicable constraints the nominal passes through untouched, which keeps
    the no-neighbor configuration bit-identical to plain sampling-based MPC.
    """
    neighbors = []
    for j, track in enumerate(tracks):
        neighbors.append(Neighbor(nb_centers[j, 0] - state.px,
                                  nb_centers[j, 1] - state.py,
                                  track.velocity[0], track.velocity[1],
                                  track.radius))
    constraints = constraints_for_agent(state, state.velocity, neighbors,
                                        cfg.orca, cfg.planner_dt, cfg.radius)
    if not constraints:
        return np.asarray(nominal_mean, float), np.asarray(nominal_std, float), None, []
    nominal = GaussianControl(ControlInput(nominal_mean[0], nominal_mean[1]),
                              np.asarray(nominal_std, float))
    result = project(nominal, cfg.noise, constraints, cfg.bounds, cfg.levels,
                     std_floor=cfg.std_floor_frac * cfg.noise.std)
    if result.status == INFEASIBLE_FALLBACK:
        # Brake: zero linear velocity at the nominal turn rate, no spread.
        return (np.array([0.0, nominal_mean[1]]), np.zeros(2),
                result.status, constraints)
    return result.adjusted.mean_array, result.adjusted.std, result.status, constraints


def _prune_tracks(self_state, tracks, cfg):
    """Indices of tracks that can matter for costs and for constraints.

    Both prunes are containment arguments, so dropping the rest leaves every
    planner output unchanged. Cost: a neighbor whose horizon-worst-case
    distance still exceeds the current nearest neighbor's horizon-best-case
    distance is never the proximity argmin and never within touching range.
    Constraint: a half-plane whose offset exceeds the reach of any bounded
    control is slack at every step (see the reciprocal-share geometry).
    """
    n = len(tracks)
    if n == 0:
        return [], []
    horizon_travel = cfg.mppi.horizon * cfg.planner_dt
    v_max = max(abs(cfg.bounds.v_min), cfg.bounds.v_max)
    d0 = np.empty(n)
    reach = np.empty(n)
    for j, t in enumerate(tracks):
        d0[j] = np.hypot(t.position[0] - self_state.px,
                         t.position[1] - self_state.py)
        reach[j] = horizon_travel * (v_max + np.hypot(*t.velocity))
    cost_keep = np.flatnonzero(d0 - reach <= d0.min() + reach.max())

    tau = cfg.orca.tau
    share = cfg.orca.reciprocity
    cons_keep = []
    for j, t in enumerate(tracks):
        combined = cfg.radius + t.radius + 2 * cfg.orca.radius_buffer
        v_rel_max = v_max + np.hypot(*t.velocity)
        slack_dist = combined + tau * v_rel_max + (2 * v_max * tau) / share
        if d0[j] - reach[j] <= slack_dist:
            cons_keep.append(j)
    return list(cost_keep), cons_keep


def plan(self_state: AgentState, goal, u_init: np.ndarray,
         tracks: list[NeighborTrack], cfg: PlannerConfig,
         rng: np.random.Generator) -> PlanResult:
    """One planning iteration; returns the command and the shifted sequence."""
    params = cfg.mppi
    horizon = params.horizon
    u_init = np.asarray(u_init, dtype=float)
    if u_init.shape != (horizon, 2):
        raise ValueError(f"u_init must have shape ({horizon}, 2)")
    goal = np.asarray(goal, dtype=float)
    dt = cfg.planner_dt

    cost_keep, cons_keep = _prune_tracks(self_state, tracks, cfg)
    cons_tracks = [tracks[j] for j in cons_keep]

    nb_pos = predict_neighbors(tracks, horizon, dt)
    nb_radii = np.array([t.radius for t in tracks])
    policy = resolve_policy(cfg)
    use_policy = policy is not None and params.n_policy_samples > 0

    sigma_star = np.sqrt(params.variance_scale) * cfg.noise.std
    mppi_means = np.empty((horizon, 2))
    mppi_stds = np.empty((horizon, 2))
    pi_means = np.empty((horizon, 2))
    pi_stds = np.empty((horizon, 2))

    statuses = {POLICY_BRANCH: [], MPPI_BRANCH: []}
    first_dists = {}
    first_constraints = []
    x_pi = self_state
    x_mppi = self_state

    for t in range(1, horizon + 1):
        tm1 = t - 1
        centers = nb_pos[tm1]
        if use_policy:
            policy_fn, k, sense_range = policy
            obs = build_observation(x_pi, goal, centers, k, sense_range)
            out = policy_fn(obs)
            pi_nom_mean, pi_nom_std = out.mean.as_array(), out.std
        mppi_nom_mean, mppi_nom_std = u_init[tm1], sigma_star

        do_project = cfg.use_safety and t <= cfg.h_safe and len(cons_tracks) > 0
        if do_project:
            cons_centers = centers[cons_keep]
            m_mean, m_std, m_status, m_cons = _project_branch(
                x_mppi, mppi_nom_mean, mppi_nom_std, cons_centers, cons_tracks, cfg)
            if m_status is not None:
                statuses[MPPI_BRANCH].append(m_status)
            if use_policy:
                p_mean, p_std, p_status, p_cons = _project_branch(
                    x_pi, pi_nom_mean, pi_nom_std, cons_centers, cons_tracks, cfg)
                if p_status is not None:
                    statuses[POLICY_BRANCH].append(p_status)
        else:
            m_mean, m_std = np.asarray(mppi_nom_mean, float), np.asarray(mppi_nom_std, float)
            m_cons = []
            if use_policy:
                p_mean, p_std, p_cons = pi_nom_mean, pi_nom_std, []

        mppi_means[tm1], mppi_stds[tm1] = m_mean, m_std
        x_mppi = step(x_mppi, ControlInput(m_mean[0], m_mean[1]), dt)
        if use_policy:
            pi_means[tm1], pi_stds[tm1] = p_mean, p_std
            x_pi = step(x_pi, ControlInput(p_mean[0], p_mean[1]), dt)
        if t == 1:
            first_dists[MPPI_BRANCH] = GaussianControl(
                ControlInput(m_mean[0], m_mean[1]), m_std.copy())
            first_constraints = m_cons
            if use_policy:
                first_dists[POLICY_BRANCH] = GaussianControl(
                    ControlInput(p_mean[0], p_mean[1]), p_std.copy())

    batches = []
    branch_stds = {MPPI_BRANCH: mppi_stds}
    if use_policy:
        branch_stds[POLICY_BRANCH] = pi_stds
        batches.append(mppi.sample_rollouts(
            DistributionSequence(pi_means, pi_stds), params.n_policy_samples,
            self_state, cfg.bounds, rng, dt, branch=POLICY_BRANCH))
    n_mppi = params.n_samples - (params.n_policy_samples if use_policy else 0)
    if n_mppi > 0:
        batches.append(mppi.sample_rollouts(
            DistributionSequence(mppi_means, mppi_stds), n_mppi,
            self_state, cfg.bounds, rng, dt, branch=MPPI_BRANCH))

    ctx = CostContext(goal, nb_pos[:, cost_keep], nb_radii[cost_keep],
                      cfg.radius, cfg.costs, branch_stds)
    costs = np.concatenate([
        mppi.batch_costs(batch, ctx, params, cfg.noise) for batch in batches])
    w = mppi.weights(costs, params.lam)
    controls = np.concatenate([batch.controls for batch in batches])
    u_star = mppi.weighted_update(controls, w, cfg.bounds)

    diag = PlanDiagnostics(
        projection_statuses=statuses,
        infeasible_steps={b: sum(1 for s in statuses[b] if s == INFEASIBLE_FALLBACK)
                          for b in statuses},
        min_predicted_neighbor_dist=_min_predicted_distance(nb_pos, self_state, u_star, dt),
        branch_samples={b.branch: len(b) for b in batches},
        first_step_dists=first_dists,
        first_step_constraints=first_constraints,
    )
    return PlanResult(ControlInput(float(u_star[0, 0]), float(u_star[0, 1])),
                      mppi.shift(u_star), diag)


def _min_predicted_distance(nb_pos, self_state, u_star, dt):
    if nb_pos.shape[1] == 0:
        return None
    states = mppi.propagate_states(self_state, u_star[None], dt)[0]
    d = np.linalg.norm(states[:, None, :2] - nb_pos, axis=2)
    return float(d.min())
