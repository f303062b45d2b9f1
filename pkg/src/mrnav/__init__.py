"""Decentralized multi-robot collision avoidance.

A sampling-based MPC whose control distribution is chance-projected onto
reciprocal-avoidance half-planes and optionally guided by a learned or
scripted policy branch, evaluated in a reproducible multi-agent simulator.
"""

from .dynamics import (AgentState, ControlBounds, ControlInput, NoiseModel,
                       affine_terms, perturb_and_clamp, step, wrap_angle)
from .mppi import (CostContext, CostWeights, DistributionSequence, MppiParams,
                   Rollout, RolloutBatch, batch_costs, rollout_cost,
                   sample_rollouts, shift, weighted_update, weights)
from .orca import (HalfPlaneConstraint, Neighbor, OrcaParams,
                   constraints_for_agent, to_control_constraint,
                   velocity_halfplane)
from .planner import (NeighborTrack, PlanResult, PlannerConfig,
                      bootstrap_sequence, plan, predict_neighbors)
from .policy import (Observation, PolicyOutput, PolicyWeights,
                     build_observation, load_weights, mlp_infer, proxy_policy,
                     save_weights)
from .projection import (GaussianControl, ProjectionResult, SafetyLevels,
                         inv_normal_cdf, normal_cdf, project,
                         violation_probability)
from .scenarios import Scenario, circle, mesh, random_scene
from .sim import RunOutcome, SimConfig, WorldState, run, tick

__all__ = [name for name in dir() if not name.startswith("_")]
