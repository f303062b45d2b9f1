"""Secondary acceptance: the toy training criterion and the cross-component
reward lockstep, each printing a PASS/FAIL line."""
import json
import math
import time
from pathlib import Path

import numpy as np

from guidance_trainer.env import EnvConfig, compute_reward
from guidance_trainer.export import save_policy
from guidance_trainer.ppo import TrainConfig, train

FIXTURE = Path(__file__).parent / "fixtures" / "golden_transitions.json"


def _report(name: str, ok: bool, detail: str = ""):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}", flush=True)
    assert ok, f"{name}: {detail}"


def test_toy_ippo_run(tmp_path):
    start = time.perf_counter()
    cfg = TrainConfig(
        env=EnvConfig(scenario="mesh-sparse", n_agents=4, episode_length=300),
        n_envs=4, total_env_steps=200_000, rollout_length=128, seed=0,
        deterministic=True)
    result = train(cfg)
    train_elapsed = time.perf_counter() - start

    returns = result.episode_returns
    q = max(1, len(returns) // 4)
    first_q = float(np.mean(returns[:q]))
    last_q = float(np.mean(returns[-q:]))

    weights_path = tmp_path / "toy_weights.json"
    save_policy(result.model, cfg.env, weights_path)

    # The exported file must load in the consumer package with zero schema
    # errors and drive a two-agent swap at smoke level.
    from mrnav.policy import load_weights
    from mrnav.presets import planner_preset
    from mrnav.scenarios import AgentSpec, Scenario
    from mrnav.sim import SUCCESS, SimConfig, run

    weights = load_weights(weights_path)
    planner = planner_preset("corl-mppi", policy=weights)
    scenario = Scenario("swap", 0, {}, [
        AgentSpec(-2.0, 0.0, 0.0, 2.0, 0.0),
        AgentSpec(2.0, 0.0, math.pi, -2.0, 0.0),
    ])
    sim_cfg = SimConfig(controllers=planner)
    successes = sum(run(scenario, sim_cfg, seed=s).status == SUCCESS
                    for s in range(5))
    elapsed = time.perf_counter() - start

    ok = (last_q > first_q and successes >= 1 and train_elapsed < 1800.0)
    _report("toy-ippo-run", ok,
            f"quartile means {first_q:.2f} -> {last_q:.2f}, swap {successes}/5, "
            f"train {train_elapsed:.0f}s, total {elapsed:.0f}s")


def test_cross_component_reward_fixture():
    with open(FIXTURE) as fh:
        golden = json.load(fh)
    worst = 0.0
    for tr in golden["transitions"]:
        r = compute_reward(
            tr["prev"][:2], tr["next"][:2], tr["goal"], tr["neighbors_next"],
            [golden["radius"]] * len(tr["neighbors_next"]),
            golden["radius"], golden["goal_tolerance"])
        worst = max(worst, abs(r - tr["reward"]))
    ok = worst < 1e-9 and len(golden["transitions"]) == 1000
    _report("cross-component-reward-fixture", ok,
            f"max |trainer - reference| = {worst:.2e} over "
            f"{len(golden['transitions'])} transitions")
