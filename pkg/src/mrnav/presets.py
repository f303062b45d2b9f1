"""Named algorithm presets with the evaluation defaults.

All robots share the same physical parameters: disk radius 0.3 m, linear
velocity in [-1, 1] m/s, angular velocity in [-2, 2] rad/s, actuation noise
diag(0.1 m/s, 0.2 rad/s)^2, and a 0.1 s step.
"""
from __future__ import annotations

from dataclasses import replace

from .dynamics import ControlBounds, NoiseModel
from .mppi import CostWeights, MppiParams
from .orca import OrcaParams
from .orca_dd import OrcaDDConfig
from .planner import PlannerConfig
from .projection import SafetyLevels

AGENT_RADIUS = 0.3
SIM_DT = 0.1

PRESET_NAMES = ("corl-mppi", "mppi-orca", "mppi", "orca-dd")


def default_bounds() -> ControlBounds:
    return ControlBounds(-1.0, 1.0, -2.0, 2.0)


def default_noise() -> NoiseModel:
    return NoiseModel(0.1, 0.2)


def planner_preset(name: str, policy=None, **overrides) -> PlannerConfig:
    """Planner configuration for one of the planner-based presets.

    corl-mppi: horizon 10, 1500 rollouts, 30% drawn from the guided branch.
    mppi-orca: horizon 30, 1500 rollouts, safety projection, no guidance.
    mppi:      plain sampling MPC, no safety projection, no guidance.
    """
    common = dict(
        bounds=default_bounds(),
        noise=default_noise(),
        radius=AGENT_RADIUS,
        planner_dt=SIM_DT,
        orca=OrcaParams(),
        # Evaluation presets run the safety threshold close to one; at 0.95
        # the 2 cm gap between the avoidance radius and the collision radius
        # is thinner than the actuation-noise tails accumulated over long
        # close-range standoffs.
        levels=SafetyLevels(0.99, 0.99),
        costs=CostWeights(),
    )
    if name == "corl-mppi":
        cfg = PlannerConfig(
            mppi=MppiParams(horizon=10, n_samples=1500, n_policy_samples=450),
            h_safe=10,
            policy=policy if policy is not None else "proxy",
            **common,
        )
    elif name == "mppi-orca":
        cfg = PlannerConfig(
            mppi=MppiParams(horizon=30, n_samples=1500, n_policy_samples=0),
            h_safe=30,
            policy=None,
            **common,
        )
    elif name == "mppi":
        cfg = PlannerConfig(
            mppi=MppiParams(horizon=10, n_samples=1500, n_policy_samples=0),
            h_safe=1,
            policy=None,
            use_safety=False,
            **common,
        )
    else:
        raise ValueError(f"unknown planner preset {name!r}")
    if overrides:
        cfg = replace(cfg, **overrides)
        cfg.validate()
    return cfg


def orca_dd_preset(**overrides) -> OrcaDDConfig:
    cfg = OrcaDDConfig(tracking_offset=AGENT_RADIUS, goal_jitter_std=0.3,
                       preferred_speed=1.0)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def controller_for(name: str, policy=None, mppi_overrides=None,
                   planner_overrides=None):
    """Controller config object for an algorithm preset name."""
    if name == "orca-dd":
        return orca_dd_preset(**(planner_overrides or {}))
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown algorithm preset {name!r}; "
                         f"expected one of {PRESET_NAMES}")
    cfg = planner_preset(name, policy=policy)
    if mppi_overrides:
        cfg = replace(cfg, mppi=replace(cfg.mppi, **mppi_overrides))
    if planner_overrides:
        cfg = replace(cfg, **planner_overrides)
    cfg.validate()
    return cfg
