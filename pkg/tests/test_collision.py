import math

import numpy as np
import pytest

from latrisk.collision import (
    RiskEstimate,
    closest_obstacle,
    collision_prob_mc,
    collision_prob_quadrature,
)
from latrisk.geometry import EgoState, Footprint, ObstacleState, Pose2
from latrisk.prediction import single_mode

from conftest import make_rng

EGO = Footprint(Pose2(0.0, 0.0, 0.0), 2.25, 1.0)
OBS_HALF = (2.25, 1.0)


def random_config(rng):
    """One randomized ego/belief configuration with meaningful overlap mass."""
    ego = Footprint(
        Pose2(0.0, 0.0, rng.uniform(-math.pi, math.pi)),
        rng.uniform(1.5, 2.5),
        rng.uniform(0.8, 1.2),
    )
    mean = Pose2(rng.uniform(-4, 4), rng.uniform(-3, 3), rng.uniform(-math.pi, math.pi))
    sx, sy = rng.uniform(0.4, 1.8, 2)
    st = rng.uniform(0.05, 0.4)
    c = rng.uniform(-0.4, 0.4) * sx * sy
    cov = np.array([[sx**2, c, 0.0], [c, sy**2, 0.0], [0.0, 0.0, st**2]])
    belief = single_mode(mean, cov)
    extents = (rng.uniform(1.5, 2.5), rng.uniform(0.7, 1.1))
    return ego, belief, extents


class TestRiskEstimate:
    def test_validation(self):
        with pytest.raises(ValueError):
            RiskEstimate(1.2, 0.0, 100, "monte-carlo")
        with pytest.raises(ValueError):
            RiskEstimate(0.5, -0.1, 100, "monte-carlo")
        with pytest.raises(ValueError):
            RiskEstimate(0.5, 0.0, 0, "monte-carlo")


class TestMonteCarlo:
    def test_certain_collision(self):
        belief = single_mode(Pose2(0, 0, 0), np.zeros((3, 3)))
        est = collision_prob_mc(EGO, belief, *OBS_HALF, n=500, rng=make_rng(0))
        assert est.value == 1.0
        assert est.stderr == 0.0

    def test_negligible_mass(self):
        belief = single_mode(Pose2(500.0, 0, 0), np.diag([1.0, 1.0, 0.01]))
        est = collision_prob_mc(EGO, belief, *OBS_HALF, n=2000, rng=make_rng(1))
        assert est.value == 0.0

    def test_small_n_rejected(self):
        belief = single_mode(Pose2(0, 0, 0), np.eye(3))
        with pytest.raises(ValueError):
            collision_prob_mc(EGO, belief, *OBS_HALF, n=50, rng=make_rng(2))

    def test_matches_quadrature_on_reference_case(self):
        belief = single_mode(Pose2(6.0, 0.0, 0.0), np.diag([4.0, 1.0, 0.01]))
        quad = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.1)
        mc = collision_prob_mc(EGO, belief, *OBS_HALF, n=20_000, rng=make_rng(3))
        assert abs(mc.value - quad.value) <= max(3 * mc.stderr, 0.02)

    def test_deterministic(self):
        belief = single_mode(Pose2(3.0, 0.5, 0.2), np.diag([1.0, 1.0, 0.05]))
        a = collision_prob_mc(EGO, belief, *OBS_HALF, n=5000, rng=make_rng(4))
        b = collision_prob_mc(EGO, belief, *OBS_HALF, n=5000, rng=make_rng(4))
        assert a == b


class TestQuadrature:
    def test_zero_cov_overlapping(self):
        belief = single_mode(Pose2(1.0, 0.0, 0.3), np.zeros((3, 3)))
        est = collision_prob_quadrature(EGO, belief, *OBS_HALF)
        assert est.value == 1.0

    def test_zero_cov_disjoint(self):
        belief = single_mode(Pose2(50.0, 0.0, 0.0), np.zeros((3, 3)))
        est = collision_prob_quadrature(EGO, belief, *OBS_HALF)
        assert est.value == 0.0

    def test_coarse_resolution_rejected(self):
        belief = single_mode(Pose2(0, 0, 0), np.eye(3))
        with pytest.raises(ValueError):
            collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.5)

    def test_grid_convergence(self):
        belief = single_mode(Pose2(6.0, 0.0, 0.0), np.diag([4.0, 1.0, 0.01]))
        coarse = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.2)
        fine = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.1)
        assert abs(coarse.value - fine.value) < 0.005

    def test_mc_agreement_randomized(self):
        rng = make_rng(5)
        for i in range(20):
            ego, belief, extents = random_config(rng)
            quad = collision_prob_quadrature(ego, belief, *extents, resolution=0.1)
            mc = collision_prob_mc(ego, belief, *extents, n=20_000, rng=make_rng(100 + i))
            assert abs(mc.value - quad.value) <= max(0.02, 3 * mc.stderr)

    def test_ego_enlargement_monotone(self):
        rng = make_rng(6)
        belief = single_mode(Pose2(3.5, 1.0, 0.4), np.diag([1.5, 0.8, 0.02]))
        base = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.15)
        for k in (1.2, 1.5, 2.0):
            grown = Footprint(EGO.center, EGO.half_length * k, EGO.half_width * k)
            est = collision_prob_quadrature(grown, belief, *OBS_HALF, resolution=0.15)
            assert est.value >= base.value - 1e-12
            base = est

    def test_translation_invariance(self):
        belief = single_mode(Pose2(4.0, -1.0, 0.6), np.diag([1.2, 0.9, 0.03]))
        a = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.1)
        offset = np.array([13.0, -7.0])
        ego2 = Footprint(Pose2(offset[0], offset[1], 0.0), EGO.half_length, EGO.half_width)
        belief2 = single_mode(
            Pose2(4.0 + offset[0], -1.0 + offset[1], 0.6), np.diag([1.2, 0.9, 0.03])
        )
        b = collision_prob_quadrature(ego2, belief2, *OBS_HALF, resolution=0.1)
        assert abs(a.value - b.value) < 1e-6

    def test_rotation_invariance(self):
        phi = 0.85
        c, s = math.cos(phi), math.sin(phi)
        rot2 = np.array([[c, -s], [s, c]])
        rot3 = np.eye(3)
        rot3[:2, :2] = rot2

        mean = np.array([4.0, -1.0, 0.6])
        cov = np.array([[1.2, 0.3, 0.0], [0.3, 0.9, 0.0], [0.0, 0.0, 0.03]])
        belief = single_mode(Pose2(*mean), cov)
        a = collision_prob_quadrature(EGO, belief, *OBS_HALF, resolution=0.1)

        mean_r = np.empty(3)
        mean_r[:2] = rot2 @ mean[:2]
        mean_r[2] = mean[2] + phi
        cov_r = rot3 @ cov @ rot3.T
        ego_r = Footprint(Pose2(0.0, 0.0, phi), EGO.half_length, EGO.half_width)
        b = collision_prob_quadrature(ego_r, single_mode(Pose2(*mean_r), cov_r), *OBS_HALF,
                                      resolution=0.1)
        assert abs(a.value - b.value) < 0.005


class TestClosestObstacle:
    def ego(self):
        return EgoState(Pose2(0, 0, 0), 10.0, 0.0)

    def test_empty(self):
        assert closest_obstacle(self.ego(), []) is None

    def test_picks_nearest(self):
        obs = [
            ObstacleState("far", Pose2(10, 0, 0), (0, 0)),
            ObstacleState("near", Pose2(3, 0, 0), (0, 0)),
        ]
        assert closest_obstacle(self.ego(), obs) == "near"

    def test_tie_break_lowest_id(self):
        obs = [
            ObstacleState("b", Pose2(5, 0, 0), (0, 0)),
            ObstacleState("a", Pose2(0, 5, 0), (0, 0)),
        ]
        assert closest_obstacle(self.ego(), obs) == "a"
