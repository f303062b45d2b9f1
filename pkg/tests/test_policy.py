import math

import numpy as np
import pytest

from mrnav.dynamics import AgentState, ControlBounds, wrap_angle
from mrnav.policy import (Layer, Observation, PolicyWeights, WeightsFormatError,
                          build_observation, load_weights, mlp_infer,
                          proxy_policy, save_weights)

BOUNDS = ControlBounds()


class TestBuildObservation:
    def test_goal_ahead_no_neighbors(self):
        obs = build_observation(AgentState(0, 0, 0), [5.0, 0.0], [], 3, 10.0)
        assert obs.goal_dist == pytest.approx(0.5)
        assert obs.goal_angle == pytest.approx(0.0)
        assert np.all(obs.neighbors == np.tile([1.0, 0.0, 0.0], (3, 1)))

    def test_goal_directly_behind_maps_to_plus_one(self):
        obs = build_observation(AgentState(0, 0, 0), [-4.0, 0.0], [], 1, 10.0)
        assert obs.goal_angle == 1.0

    def test_range_filter_before_selection(self):
        neighbors = [[2.0, 0.0], [0.0, 4.0], [12.0, 0.0]]
        obs = build_observation(AgentState(0, 0, 0), [1.0, 0.0], neighbors, 2, 10.0)
        assert obs.neighbors[0] == pytest.approx([0.2, 0.0, 1.0])
        assert obs.neighbors[1, 0] == pytest.approx(0.4)
        assert obs.neighbors[1, 2] == 1.0
        # the 12 m neighbor was excluded, not just outranked
        obs_k3 = build_observation(AgentState(0, 0, 0), [1.0, 0.0], neighbors, 3, 10.0)
        assert np.all(obs_k3.neighbors[2] == [1.0, 0.0, 0.0])

    def test_ranges_hold_on_random_scenes(self):
        rng = np.random.default_rng(31)
        for _ in range(10_000):
            state = AgentState(*rng.uniform(-30, 30, 2), rng.uniform(-9, 9))
            goal = rng.uniform(-50, 50, 2)
            nbs = rng.uniform(-40, 40, (int(rng.integers(0, 6)), 2))
            obs = build_observation(state, goal, nbs, 4, 10.0)
            assert 0.0 <= obs.goal_dist <= 1.0
            assert -1.0 <= obs.goal_angle <= 1.0
            assert np.all(obs.neighbors[:, 0] >= 0.0)
            assert np.all(obs.neighbors[:, 0] <= 1.0)
            assert np.all(np.abs(obs.neighbors[:, 1]) <= 1.0)
            assert set(np.unique(obs.neighbors[:, 2])) <= {0.0, 1.0}
            assert obs.vector().shape == (2 + 3 * 4,)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(32)
        for _ in range(300):
            state = AgentState(*rng.uniform(-5, 5, 2), rng.uniform(-3, 3))
            goal = rng.uniform(-8, 8, 2)
            nbs = rng.uniform(-8, 8, (3, 2))
            ang = rng.uniform(-math.pi, math.pi)
            shiftv = rng.uniform(-10, 10, 2)
            rot = np.array([[math.cos(ang), -math.sin(ang)],
                            [math.sin(ang), math.cos(ang)]])
            state2 = AgentState(*(rot @ state.position + shiftv), state.theta + ang)
            goal2 = rot @ goal + shiftv
            nbs2 = (rot @ nbs.T).T + shiftv
            a = build_observation(state, goal, nbs, 3, 10.0)
            b = build_observation(state2, goal2, nbs2, 3, 10.0)
            assert a.goal_dist == pytest.approx(b.goal_dist, abs=1e-9)
            assert float(wrap_angle((a.goal_angle - b.goal_angle) * math.pi)) == \
                pytest.approx(0.0, abs=1e-9)
            assert np.allclose(a.neighbors[:, 0], b.neighbors[:, 0], atol=1e-9)
            assert np.allclose(a.neighbors[:, 2], b.neighbors[:, 2])


def _zero_weights(k=2, hidden=4):
    n_in = 2 + 3 * k
    return PolicyWeights(
        format_version=1, k_neighbors=k, sense_range=10.0,
        action_low=np.array([-1.0, -2.0]), action_high=np.array([1.0, 2.0]),
        log_std=np.array([math.log(0.5), math.log(0.5)]),
        layers=[
            Layer(n_in, hidden, np.zeros((n_in, hidden)), np.zeros(hidden), "tanh"),
            Layer(hidden, 2, np.zeros((hidden, 2)), np.zeros(2), "linear"),
        ],
    )


class TestMlpInfer:
    def test_zero_weights_give_midpoint_and_scaled_std(self):
        w = _zero_weights()
        obs = build_observation(AgentState(0, 0, 0), [3.0, 1.0],
                                [[1.0, 0.5]], 2, 10.0)
        out = mlp_infer(w, obs)
        assert out.mean.v == pytest.approx(0.0)   # midpoint of [-1, 1]
        assert out.mean.w == pytest.approx(0.0)   # midpoint of [-2, 2]
        assert np.allclose(out.std, [0.5 * 1.0, 0.5 * 2.0])

    def test_single_linear_selector_layer(self):
        # hand-written selector: head = (goal_dist, goal_angle)
        k = 2
        n_in = 2 + 3 * k
        w_mat = np.zeros((n_in, 2))
        w_mat[0, 0] = 1.0
        w_mat[1, 1] = 1.0
        w = PolicyWeights(1, k, 10.0, np.array([-1.0, -2.0]), np.array([1.0, 2.0]),
                          np.array([math.log(0.2), math.log(0.2)]),
                          [Layer(n_in, 2, w_mat, np.zeros(2), "linear")])
        obs = build_observation(AgentState(0, 0, 0), [5.0, 5.0], [], k, 10.0)
        out = mlp_infer(w, obs)
        span = np.array([2.0, 4.0])
        low = np.array([-1.0, -2.0])
        head = np.array([obs.goal_dist, obs.goal_angle])
        expected = low + (np.tanh(head) + 1) / 2 * span
        assert out.mean.v == pytest.approx(expected[0], abs=1e-12)
        assert out.mean.w == pytest.approx(expected[1], abs=1e-12)

    def test_mean_inside_action_box(self):
        # Strict interiority with non-saturating heads; with deliberately
        # saturating weights tanh rounds to exactly +-1.0 in float, so the
        # box closure is the verifiable guarantee there.
        rng = np.random.default_rng(33)
        k = 2
        n_in = 2 + 3 * k
        for scale, strict in ((1.0, True), (50.0, False)):
            layers = [Layer(n_in, 8, rng.normal(size=(n_in, 8)) * scale,
                            rng.normal(size=8), "tanh"),
                      Layer(8, 2, rng.normal(size=(8, 2)) * scale,
                            rng.normal(size=2), "linear")]
            w = PolicyWeights(1, k, 10.0, np.array([-1.0, -2.0]),
                              np.array([1.0, 2.0]), np.zeros(2), layers)
            for _ in range(200):
                state = AgentState(*rng.uniform(-10, 10, 2), rng.uniform(-3, 3))
                obs = build_observation(state, rng.uniform(-10, 10, 2),
                                        rng.uniform(-10, 10, (2, 2)), k, 10.0)
                out = mlp_infer(w, obs)
                if strict:
                    assert -1.0 < out.mean.v < 1.0
                    assert -2.0 < out.mean.w < 2.0
                else:
                    assert -1.0 <= out.mean.v <= 1.0
                    assert -2.0 <= out.mean.w <= 2.0

    def test_lipschitz_bound_on_perturbation(self):
        rng = np.random.default_rng(34)
        k = 2
        n_in = 2 + 3 * k
        layers = [Layer(n_in, 6, rng.normal(size=(n_in, 6)), rng.normal(size=6), "tanh"),
                  Layer(6, 2, rng.normal(size=(6, 2)), rng.normal(size=2), "linear")]
        w = PolicyWeights(1, k, 10.0, np.array([-1.0, -2.0]), np.array([1.0, 2.0]),
                          np.zeros(2), layers)
        # operator norms x tanh slopes (<=1) x output squash scale span/2
        lip = np.prod([np.linalg.norm(l.w, 2) for l in layers]) * (4.0 / 2.0)
        obs = build_observation(AgentState(0, 0, 0), [4.0, 2.0],
                                [[1.0, 1.0], [2.0, -1.0]], k, 10.0)
        base = mlp_infer(w, obs).mean.as_array()
        for idx in range(n_in):
            vec = obs.vector().copy()
            vec[idx] += 1e-6
            perturbed = Observation(vec[0], vec[1], vec[2:].reshape(k, 3), 10.0)
            out = mlp_infer(w, perturbed).mean.as_array()
            assert np.linalg.norm(out - base) <= lip * 1e-6 + 1e-15

    def test_dimension_mismatch_raises(self):
        w = _zero_weights(k=2)
        obs = build_observation(AgentState(0, 0, 0), [1.0, 0.0], [], 5, 10.0)
        with pytest.raises(WeightsFormatError):
            mlp_infer(w, obs)


class TestProxyPolicy:
    def test_goal_ahead_full_speed(self):
        obs = build_observation(AgentState(0, 0, 0), [5.0, 0.0], [], 8, 10.0)
        out = proxy_policy(obs, BOUNDS)
        assert out.mean.v == pytest.approx(1.0)
        assert out.mean.w == pytest.approx(0.0)
        assert np.allclose(out.std, [0.15 * 2 / 2, 0.15 * 4 / 2])

    def test_goal_reached_stops(self):
        obs = build_observation(AgentState(0, 0, 0), [0.0, 0.0], [], 8, 10.0)
        assert proxy_policy(obs, BOUNDS).mean.v == 0.0

    def test_head_on_tie_breaks_positive(self):
        obs = build_observation(AgentState(0, 0, 0), [5.0, 0.0],
                                [[1.0, 0.0]], 8, 10.0)
        out = proxy_policy(obs, BOUNDS)
        assert out.mean.w > 0.0
        # swerve angle pi/3: v = vmax * cos(pi/3) * min(1, 5)
        assert out.mean.v == pytest.approx(math.cos(math.pi / 3))

    def test_biases_away_from_neighbor_side(self):
        left = build_observation(AgentState(0, 0, 0), [5.0, 0.0],
                                 [[1.0, 0.4]], 8, 10.0)
        right = build_observation(AgentState(0, 0, 0), [5.0, 0.0],
                                  [[1.0, -0.4]], 8, 10.0)
        assert proxy_policy(left, BOUNDS).mean.w < 0.0
        assert proxy_policy(right, BOUNDS).mean.w > 0.0

    def test_deterministic(self):
        obs = build_observation(AgentState(0, 0, 0.5), [3.0, -2.0],
                                [[1.0, 1.0]], 8, 10.0)
        a = proxy_policy(obs, BOUNDS)
        b = proxy_policy(obs, BOUNDS)
        assert a.mean.as_array().tobytes() == b.mean.as_array().tobytes()
        assert a.std.tobytes() == b.std.tobytes()


class TestWeightsIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(35)
        k = 3
        n_in = 2 + 3 * k
        w = PolicyWeights(1, k, 10.0, np.array([-1.0, -2.0]), np.array([1.0, 2.0]),
                          rng.normal(size=2),
                          [Layer(n_in, 5, rng.normal(size=(n_in, 5)),
                                 rng.normal(size=5), "tanh"),
                           Layer(5, 2, rng.normal(size=(5, 2)),
                                 rng.normal(size=2), "linear")])
        path = tmp_path / "weights.json"
        save_weights(w, path)
        loaded = load_weights(path)
        # lossless at the stored 9-significant-digit precision
        save_weights(loaded, tmp_path / "again.json")
        assert (tmp_path / "again.json").read_text() == path.read_text()
        assert loaded.k_neighbors == k
        obs = build_observation(AgentState(0, 0, 0), [2.0, 1.0],
                                [[1.0, 0.0]], k, 10.0)
        out_a = mlp_infer(w, obs).mean.as_array()
        out_b = mlp_infer(loaded, obs).mean.as_array()
        assert np.allclose(out_a, out_b, atol=1e-7)

    def test_truncated_file_fails_cleanly(self, tmp_path):
        path = tmp_path / "broken.json"
        save_weights(_zero_weights(), path)
        path.write_text(path.read_text()[:100])
        with pytest.raises(WeightsFormatError):
            load_weights(path)

    def test_missing_field(self, tmp_path):
        import json
        path = tmp_path / "w.json"
        save_weights(_zero_weights(), path)
        doc = json.loads(path.read_text())
        del doc["log_std"]
        path.write_text(json.dumps(doc))
        with pytest.raises(WeightsFormatError, match="log_std"):
            load_weights(path)

    def test_dimension_chain_break(self, tmp_path):
        import json
        path = tmp_path / "w.json"
        save_weights(_zero_weights(k=2, hidden=4), path)
        doc = json.loads(path.read_text())
        doc["k_neighbors"] = 3  # first layer no longer matches 2 + 3k
        path.write_text(json.dumps(doc))
        with pytest.raises(WeightsFormatError, match="rows"):
            load_weights(path)

    def test_unknown_activation(self, tmp_path):
        import json
        path = tmp_path / "w.json"
        save_weights(_zero_weights(), path)
        doc = json.loads(path.read_text())
        doc["layers"][0]["act"] = "swish"
        path.write_text(json.dumps(doc))
        with pytest.raises(WeightsFormatError, match="activation"):
            load_weights(path)

    def test_version_mismatch(self, tmp_path):
        import json
        path = tmp_path / "w.json"
        save_weights(_zero_weights(), path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(WeightsFormatError, match="format_version"):
            load_weights(path)
