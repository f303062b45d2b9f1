import math

import numpy as np
import pytest

from mrnav.scenarios import (Scenario, circle, load_scenario, mesh,
                             random_scene, save_scenario, scenario_bytes)


class TestCircle:
    def test_two_agents_on_diameter(self):
        s = circle(2, 14.0)
        a, b = s.agents
        assert (a.px, a.py) == pytest.approx((7.0, 0.0))
        assert (b.px, b.py) == pytest.approx((-7.0, 0.0))
        assert (a.goal_x, a.goal_y) == pytest.approx((-7.0, 0.0))
        assert (b.goal_x, b.goal_y) == pytest.approx((7.0, 0.0))
        assert abs(a.theta) == pytest.approx(math.pi)
        assert b.theta == pytest.approx(0.0)

    def test_four_agents_square(self):
        s = circle(4, 14.0)
        pts = np.array([[a.px, a.py] for a in s.agents])
        # vertices of a square: consecutive points at right angles
        d = np.hypot(*(pts[1] - pts[0]))
        assert all(np.hypot(*(pts[(i + 1) % 4] - pts[i])) == pytest.approx(d)
                   for i in range(4))
        for a in s.agents:
            assert (a.goal_x, a.goal_y) == pytest.approx((-a.px, -a.py))

    def test_paper_sizes_fit(self):
        for n in range(5, 55, 5):
            s = circle(n, 14.0)
            assert s.n == n

    def test_overfull_rejected(self):
        with pytest.raises(ValueError):
            circle(100, 14.0)

    def test_index_rotation_invariance(self):
        n = 6
        s = circle(n, 14.0)
        ang = 2 * math.pi / n
        rot = np.array([[math.cos(ang), -math.sin(ang)],
                        [math.sin(ang), math.cos(ang)]])
        for i in range(n):
            a, b = s.agents[i], s.agents[(i + 1) % n]
            assert np.allclose(rot @ [a.px, a.py], [b.px, b.py], atol=1e-9)
            assert np.allclose(rot @ [a.goal_x, a.goal_y],
                               [b.goal_x, b.goal_y], atol=1e-9)


class TestMesh:
    def test_dense_2x2_coordinates(self):
        s = mesh(2, 1.5, 4, seed=0)
        pts = sorted((a.px, a.py) for a in s.agents)
        assert pts == [(-0.75, -0.75), (-0.75, 0.75), (0.75, -0.75), (0.75, 0.75)]
        for a in s.agents:
            assert (a.goal_x, a.goal_y) != (a.px, a.py)  # derangement
        assert all(a.theta == 0.0 for a in s.agents)

    def test_dense_5x5(self):
        s = mesh(5, 1.5, 25, seed=1)
        assert s.n == 25
        starts = {(a.px, a.py) for a in s.agents}
        goals = {(a.goal_x, a.goal_y) for a in s.agents}
        assert starts == goals  # goals are a permutation of occupied cells

    def test_degenerate_single_cell(self):
        s = mesh(1, 2.0, 1, seed=0)
        assert (s.agents[0].goal_x, s.agents[0].goal_y) == \
            (s.agents[0].px, s.agents[0].py)

    def test_overfull_rejected(self):
        with pytest.raises(ValueError):
            mesh(2, 1.5, 5, seed=0)

    def test_lattice_exactness(self):
        s = mesh(6, 2.0, 32, seed=3)
        offset = (6 - 1) / 2.0
        lattice = {(i - offset) * 2.0 for i in range(6)}
        for a in s.agents:
            assert a.px in lattice and a.py in lattice
            assert a.goal_x in lattice and a.goal_y in lattice

    def test_derangement_over_seeds(self):
        for seed in range(30):
            s = mesh(3, 1.5, 9, seed=seed)
            assert all((a.goal_x, a.goal_y) != (a.px, a.py) for a in s.agents)


class TestRandomScene:
    def test_paper_shape(self):
        s = random_scene(10, 40.0, seed=0)
        assert s.n == 10
        for a in s.agents:
            assert -20 <= a.px <= 20 and -20 <= a.py <= 20
            assert -20 <= a.goal_x <= 20 and -20 <= a.goal_y <= 20
            assert -math.pi < a.theta <= math.pi

    def test_single_agent(self):
        assert random_scene(1, 40.0, seed=5).n == 1

    def test_start_spacing(self):
        s = random_scene(30, 40.0, seed=2)
        pts = np.array([[a.px, a.py] for a in s.agents])
        for i in range(30):
            for j in range(i + 1, 30):
                assert np.hypot(*(pts[i] - pts[j])) >= 2 * 0.3 + 0.1 - 1e-12

    def test_crowded_area_errors(self):
        with pytest.raises(ValueError):
            random_scene(50, 2.0, seed=0)

    def test_seed_determinism(self):
        a = scenario_bytes(random_scene(12, 40.0, seed=7))
        b = scenario_bytes(random_scene(12, 40.0, seed=7))
        assert a == b
        c = scenario_bytes(random_scene(12, 40.0, seed=8))
        assert a != c


def test_serialization_round_trip(tmp_path):
    s = random_scene(5, 40.0, seed=9)
    path = tmp_path / "scene.json"
    save_scenario(s, path)
    loaded = load_scenario(path)
    assert scenario_bytes(loaded) == scenario_bytes(s)
