import numpy as np
import pytest

from mrnav.dynamics import ControlBounds, NoiseModel
from mrnav.mppi import MppiParams
from mrnav.planner import PlannerConfig
from mrnav.presets import planner_preset
from mrnav.scenarios import AgentSpec, Scenario
from mrnav.sim import (COLLISION, SUCCESS, TIMEOUT, SimConfig, init_world, run,
                       tick)


def _small_planner(policy=None, preset="mppi", **kwargs):
    cfg = planner_preset(preset)
    over = {"mppi": MppiParams(horizon=6, n_samples=64,
                               n_policy_samples=16 if policy else 0),
            "h_safe": 6 if preset != "mppi" else 1}
    if policy is not None:
        over["policy"] = policy
    over.update(kwargs)
    return PlannerConfig(**{**cfg.__dict__, **over})


def _sim_cfg(controller, noise=(0.1, 0.2), step_limit=1000):
    return SimConfig(dt=0.1, step_limit=step_limit, goal_tolerance=0.3,
                     noise=NoiseModel(*noise), bounds=ControlBounds(),
                     controllers=controller)


def _scenario(agents):
    return Scenario("custom", 0, {}, [AgentSpec(*a) for a in agents])


class TestLatchingAndTermination:
    def test_agent_at_goal_latches_at_step_zero(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 0.0, 0.0)])
        cfg = _sim_cfg(_small_planner())
        world = init_world(scenario, cfg, seed=0)
        assert world.agents[0].reached_at == 0
        # later ticks may move the agent; the latch never unsets
        world = tick(world, cfg)
        world = tick(world, cfg)
        assert world.agents[0].reached_at == 0

    def test_overlapping_agents_collide_on_first_tick(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 5.0, 0.0),
                              (0.1, 0.0, 3.14, -5.0, 0.0)])
        cfg = _sim_cfg(_small_planner(), noise=(0.0, 0.0))
        out = run(scenario, cfg, seed=0)
        assert out.status == COLLISION
        assert out.steps_executed == 1
        assert out.makespan_s is None

    def test_zero_step_limit_times_out(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 5.0, 0.0)])
        cfg = _sim_cfg(_small_planner(), step_limit=0)
        out = run(scenario, cfg, seed=0)
        assert out.status == TIMEOUT

    def test_all_on_goal_immediate_success(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 0.05, 0.0),
                              (3.0, 3.0, 0.0, 3.0, 3.1)])
        cfg = _sim_cfg(_small_planner())
        out = run(scenario, cfg, seed=0)
        assert out.status == SUCCESS
        assert out.makespan_s == 0.0
        assert out.arrival_steps == [0, 0]


class TestDeterminismAndCausality:
    def test_noise_free_single_agent_bit_reproducible(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 2.0, 0.0)])
        cfg = _sim_cfg(_small_planner(), noise=(0.0, 0.0), step_limit=100)
        a = run(scenario, cfg, seed=3)
        b = run(scenario, cfg, seed=3)
        assert a == b

    def test_seeded_run_reproducible_with_noise(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 2.0, 0.0),
                              (4.0, 0.3, 3.14, -2.0, 0.3)])
        cfg = _sim_cfg(_small_planner(preset="mppi-orca"), step_limit=150)
        a = run(scenario, cfg, seed=11)
        b = run(scenario, cfg, seed=11)
        assert a == b
        c = run(scenario, cfg, seed=12)
        assert a != c

    def test_tick_invariant_to_processing_order(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 3.0, 0.0),
                              (3.0, 0.0, 3.14, 0.0, 0.0),
                              (1.5, 1.5, -1.0, 1.5, -2.0)])
        cfg = _sim_cfg(_small_planner(preset="mppi-orca"))
        world = init_world(scenario, cfg, seed=5)
        forward = tick(world, cfg, order=[0, 1, 2])
        shuffled = tick(world, cfg, order=[2, 0, 1])
        for a, b in zip(forward.agents, shuffled.agents):
            assert a.state.as_array().tobytes() == b.state.as_array().tobytes()
            assert a.u_init.tobytes() == b.u_init.tobytes()

    def test_velocity_consistency(self):
        scenario = _scenario([(0.0, 0.0, 0.3, 3.0, 1.0)])
        cfg = _sim_cfg(_small_planner(), step_limit=40)
        world = init_world(scenario, cfg, seed=6)
        for _ in range(20):
            prev = world.agents[0].state
            world = tick(world, cfg)
            cur = world.agents[0].state
            assert cur.vx == pytest.approx((cur.px - prev.px) / cfg.dt)
            assert cur.vy == pytest.approx((cur.py - prev.py) / cfg.dt)


class TestRunOutcomes:
    def test_single_agent_reaches_goal_quickly(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 2.0, 0.0)])
        cfg = _sim_cfg(_small_planner(), step_limit=200)
        out = run(scenario, cfg, seed=1)
        assert out.status == SUCCESS
        assert out.makespan_s <= 10.0

    def test_success_run_min_distance_above_touching(self):
        scenario = _scenario([(0.0, 0.0, 0.0, 3.0, 0.0),
                              (0.0, 2.0, 0.0, 3.0, 2.0)])
        cfg = _sim_cfg(_small_planner(preset="mppi-orca"), step_limit=300)
        out = run(scenario, cfg, seed=2)
        assert out.status == SUCCESS
        assert out.min_pairwise_dist >= 0.6

    def test_trajectory_log_schema(self, tmp_path):
        import csv
        scenario = _scenario([(0.0, 0.0, 0.0, 1.0, 0.0)])
        cfg = _sim_cfg(_small_planner(), step_limit=50)
        path = tmp_path / "traj.csv"
        out = run(scenario, cfg, seed=4, traj_path=path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "agent", "px", "py", "theta",
                           "v_cmd", "w_cmd", "v_exec", "w_exec"]
        assert len(rows) - 1 == out.steps_executed
        bounds = ControlBounds()
        for row in rows[1:]:
            assert bounds.v_min <= float(row[7]) <= bounds.v_max
            assert bounds.w_min <= float(row[8]) <= bounds.w_max


class TestMixedControllers:
    def test_per_agent_algorithm_assignment(self):
        from mrnav.orca_dd import OrcaDDConfig
        scenario = _scenario([(0.0, 0.0, 0.0, 3.0, 0.0),
                              (3.0, 2.0, 3.14, 0.0, 2.0)])
        planner = _small_planner(preset="mppi-orca")
        dd = OrcaDDConfig(tracking_offset=0.3, goal_jitter_std=0.3)
        cfg = _sim_cfg([planner, dd], step_limit=300)
        out = run(scenario, cfg, seed=3)
        assert out.status in (SUCCESS, TIMEOUT)
        a = run(scenario, cfg, seed=3)
        assert a == out  # mixed-controller runs stay seed-deterministic
