"""Decentralized multi-agent simulation loop.

Each tick every agent plans against a snapshot of the others taken at the
end of the previous step, all commands are perturbed by actuation noise,
and all agents move simultaneously. Collisions are evaluated on post-step
positions and terminate the run; goal arrivals latch at the first step
inside tolerance and are never unset.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .dynamics import AgentState, ControlBounds, ControlInput, NoiseModel, perturb_and_clamp, step
from .orca_dd import OrcaDDConfig, orca_dd_command
from .planner import NeighborTrack, PlannerConfig, bootstrap_sequence, plan
from .scenarios import Scenario

SUCCESS = "success"
COLLISION = "collision"
TIMEOUT = "timeout"

TRAJ_HEADER = ["step", "agent", "px", "py", "theta",
               "v_cmd", "w_cmd", "v_exec", "w_exec"]


@dataclass
class SimAgent:
    state: AgentState
    goal: np.ndarray
    radius: float
    reached_at: int | None
    u_init: np.ndarray

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=float)


@dataclass
class WorldState:
    agents: list[SimAgent]
    step: int
    seed: int
    collided: bool = False


@dataclass
class SimConfig:
    dt: float = 0.1
    step_limit: int = 1000
    goal_tolerance: float = 0.3
    noise: NoiseModel = field(default_factory=NoiseModel)
    bounds: ControlBounds = field(default_factory=ControlBounds)
    controllers: object = None  # single controller config or one per agent

    def __post_init__(self):
        if self.dt <= 0 or self.step_limit < 0 or self.goal_tolerance <= 0:
            raise ValueError("sim parameters must be positive")


@dataclass
class RunOutcome:
    status: str
    makespan_s: float | None
    arrival_steps: list
    min_pairwise_dist: float | None
    steps_executed: int


def _controller_for(cfg: SimConfig, idx: int):
    ctrl = cfg.controllers
    if isinstance(ctrl, (list, tuple)):
        return ctrl[idx]
    return ctrl


def init_world(scenario: Scenario, cfg: SimConfig, seed: int) -> WorldState:
    agents = []
    for i, spec in enumerate(scenario.agents):
        ctrl = _controller_for(cfg, i)
        horizon = ctrl.mppi.horizon if isinstance(ctrl, PlannerConfig) else 1
        agents.append(SimAgent(
            state=AgentState(spec.px, spec.py, spec.theta),
            goal=spec.goal,
            radius=spec.radius,
            reached_at=None,
            u_init=bootstrap_sequence(horizon),
        ))
    world = WorldState(agents, 0, seed)
    _latch_arrivals(world, cfg)
    return world


def _latch_arrivals(world: WorldState, cfg: SimConfig) -> None:
    for agent in world.agents:
        if agent.reached_at is None:
            if np.hypot(*(agent.state.position - agent.goal)) <= cfg.goal_tolerance:
                agent.reached_at = world.step


def _pairwise_min_dist(world: WorldState) -> float | None:
    n = len(world.agents)
    if n < 2:
        return None
    pos = np.array([a.state.position for a in world.agents])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(n, k=1)
    return float(dist[iu].min())


def _any_collision(world: WorldState) -> bool:
    n = len(world.agents)
    if n < 2:
        return False
    pos = np.array([a.state.position for a in world.agents])
    radii = np.array([a.radius for a in world.agents])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    limit = radii[:, None] + radii[None, :]
    iu = np.triu_indices(n, k=1)
    return bool(np.any(dist[iu] < limit[iu]))


def tick(world: WorldState, cfg: SimConfig, order=None, log=None) -> WorldState:
    """One synchronous round: plan from the snapshot, perturb, move, detect.

    `order` only permutes the planning loop (used by the snapshot-causality
    test); per-agent substreams keyed by (seed, agent, step) make the result
    independent of it.
    """
    n = len(world.agents)
    indices = list(order) if order is not None else list(range(n))
    commands: list[ControlInput | None] = [None] * n
    next_inits: list[np.ndarray | None] = [None] * n

    for idx in indices:
        agent = world.agents[idx]
        tracks = [
            NeighborTrack(other.state.position, other.state.velocity, other.radius)
            for j, other in enumerate(world.agents) if j != idx
        ]
        ctrl = _controller_for(cfg, idx)
        if isinstance(ctrl, PlannerConfig):
            stream = rngmod.substream(world.seed, idx, world.step, rngmod.PLAN)
            result = plan(agent.state, agent.goal, agent.u_init, tracks, ctrl, stream)
            commands[idx] = result.command
            next_inits[idx] = result.next_init
        elif isinstance(ctrl, OrcaDDConfig):
            stream = rngmod.substream(world.seed, idx, world.step, rngmod.JITTER)
            commands[idx] = orca_dd_command(agent.state, agent.goal, tracks, ctrl,
                                            agent.radius, cfg.bounds, cfg.dt, stream)
            next_inits[idx] = agent.u_init
        else:
            raise TypeError(f"unsupported controller {type(ctrl).__name__}")

    new_agents = []
    for idx, agent in enumerate(world.agents):
        exec_stream = rngmod.substream(world.seed, idx, world.step, rngmod.EXEC)
        executed = perturb_and_clamp(commands[idx], cfg.noise, cfg.bounds, exec_stream)
        new_state = step(agent.state, executed, cfg.dt)
        if log is not None:
            log.append([world.step, idx, new_state.px, new_state.py, new_state.theta,
                        commands[idx].v, commands[idx].w, executed.v, executed.w])
        new_agents.append(replace(agent, state=new_state, u_init=next_inits[idx]))

    new_world = WorldState(new_agents, world.step + 1, world.seed)
    _latch_arrivals(new_world, cfg)
    new_world.collided = _any_collision(new_world)
    return new_world


def run(scenario: Scenario, cfg: SimConfig, seed: int, traj_path=None) -> RunOutcome:
    """Loop ticks until success, collision, or the step limit."""
    world = init_world(scenario, cfg, seed)
    min_dist = _pairwise_min_dist(world)
    log = [] if traj_path is not None else None

    status = None
    while True:
        if all(agent.reached_at is not None for agent in world.agents):
            status = SUCCESS
            break
        if world.step >= cfg.step_limit:
            status = TIMEOUT
            break
        world = tick(world, cfg, log=log)
        d = _pairwise_min_dist(world)
        if d is not None:
            min_dist = d if min_dist is None else min(min_dist, d)
        if world.collided:
            status = COLLISION
            break

    arrival_steps = [agent.reached_at for agent in world.agents]
    makespan = None
    if status == SUCCESS:
        makespan = cfg.dt * max(arrival_steps)

    if traj_path is not None:
        with open(traj_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJ_HEADER)
            writer.writerows(log)

    return RunOutcome(status, makespan, arrival_steps, min_dist, world.step)
