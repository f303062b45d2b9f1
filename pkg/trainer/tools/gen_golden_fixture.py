"""Generate the golden transition fixture from the planner stack.

Runs seeded random transitions through the planner package's dynamics and
observation builder, computes the training reward with that package's
arithmetic (distances, goal tolerance, collision predicate), and freezes
everything into a JSON fixture. The trainer's re-implementations are tested
against this file, keeping both sides in lockstep without a code dependency.

Usage: python3 tools/gen_golden_fixture.py [out_path]
"""
import json
import math
import sys

import numpy as np

from mrnav.dynamics import AgentState, ControlBounds, ControlInput, step
from mrnav.policy import build_observation

DT = 0.1
GOAL_TOLERANCE = 0.3
RADIUS = 0.3
K = 8
SENSE_RANGE = 10.0
N_TRANSITIONS = 1000


def main(out_path):
    rng = np.random.default_rng(20250810)
    bounds = ControlBounds()
    transitions = []
    for _ in range(N_TRANSITIONS):
        state = AgentState(*rng.uniform(-8, 8, 2), rng.uniform(-math.pi, math.pi))
        control = bounds.clamp(ControlInput(*rng.uniform(-1.5, 2.5, 2)))
        goal = rng.uniform(-10, 10, 2)
        n_nb = int(rng.integers(0, 6))
        nb_prev = rng.uniform(-9, 9, (n_nb, 2))
        nb_vel = rng.uniform(-1, 1, (n_nb, 2))
        # occasionally park a neighbor close enough to collide after the step
        if n_nb and rng.random() < 0.3:
            offset = rng.uniform(-0.5, 0.5, 2)
            nb_prev[0] = [state.px + offset[0], state.py + offset[1]]
            nb_vel[0] = 0.0

        nxt = step(state, control, DT)
        nb_next = nb_prev + DT * nb_vel

        prev_dist = math.hypot(state.px - goal[0], state.py - goal[1])
        next_dist = math.hypot(nxt.px - goal[0], nxt.py - goal[1])
        on_goal = next_dist <= GOAL_TOLERANCE
        colliding = any(
            math.hypot(nxt.px - p[0], nxt.py - p[1]) < 2 * RADIUS
            for p in nb_next)
        reward = 0.5 * (prev_dist - next_dist) + (0.2 if on_goal else 0.0) \
            - (1.0 if colliding else 0.0)

        obs = build_observation(state, goal, nb_prev, K, SENSE_RANGE)
        transitions.append({
            "prev": [state.px, state.py, state.theta],
            "control": [control.v, control.w],
            "next": [nxt.px, nxt.py, nxt.theta],
            "goal": goal.tolist(),
            "neighbors_prev": nb_prev.tolist(),
            "neighbors_vel": nb_vel.tolist(),
            "neighbors_next": nb_next.tolist(),
            "reward": reward,
            "obs_prev": obs.vector().tolist(),
        })

    doc = {
        "dt": DT,
        "goal_tolerance": GOAL_TOLERANCE,
        "radius": RADIUS,
        "k_neighbors": K,
        "sense_range": SENSE_RANGE,
        "transitions": transitions,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    print(f"wrote {len(transitions)} transitions to {out_path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/golden_transitions.json")
