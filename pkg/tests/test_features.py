import math
from collections import namedtuple

import numpy as np
import pytest
import shapely

from blockforge.env import Task
from blockforge.features import (
    containing_pixel,
    pixel_axes,
    pixel_size,
    q_value,
    rasterize_action,
    reward,
    reward_field,
    save_feature_image,
    state_features,
    task_features,
)
from blockforge.geometry import Placement, Pose, world_polygon
from conftest import SQUARE, TRAPEZOID, square_at, trapezoid_at

# duck-typed stand-in so reward_field can be probed without Task validation
FakeTask = namedtuple("FakeTask", ["targets", "obstacles"])


def shapely_raster_count(placement, d):
    """Oracle: count pixel centers strictly inside the block polygon."""
    poly = shapely.Polygon(world_polygon(placement))
    xs, zs = pixel_axes(d)
    gx, gz = np.meshgrid(xs, zs)
    return int(np.sum(shapely.contains_xy(poly, gx.ravel(), gz.ravel())))


def simple_task(targets, obstacles=(), shapes=(SQUARE,)):
    from blockforge.env import Obstacle
    obs = tuple(Obstacle(*o) for o in obstacles)
    return Task(id="t", targets=tuple(targets), obstacles=obs, shapes=tuple(shapes))


class TestRasterize:
    def test_unit_square_against_oracle(self):
        a = square_at(0.0, 0.78125)
        img = rasterize_action(a, 64)
        count = int(img.sum())
        assert count == shapely_raster_count(a, 64)
        assert 25 <= count <= 49  # ~6.4 px per unit at d=64

    def test_random_poses_match_oracle_and_min_coverage(self, rng):
        for k in range(300):
            shape_p = square_at if rng.random() < 0.5 else trapezoid_at
            a = shape_p(rng.uniform(-4, 4), rng.uniform(0.7, 9.0))
            a = Placement(a.shape, Pose(a.pose.x, a.pose.z, rng.uniform(-math.pi, math.pi)))
            img = rasterize_action(a, 64)
            count = int(img.sum())
            assert count >= 25
            if k < 50:
                assert count == shapely_raster_count(a, 64)
            assert set(np.unique(img)) <= {0.0, 1.0}

    def test_resolution_scaling(self, rng):
        for _ in range(20):
            a = square_at(rng.uniform(-3, 3), rng.uniform(0.6, 8), rng.uniform(-1, 1))
            c64 = rasterize_action(a, 64).sum()
            c128 = rasterize_action(a, 128).sum()
            assert abs(c128 - 4 * c64) <= 0.15 * 4 * c64

    def test_shift_equivariance(self, rng):
        px = pixel_size(64)
        for _ in range(50):
            a = square_at(rng.uniform(-2.5, 2.5), rng.uniform(2, 8), rng.uniform(-1, 1))
            di, dj = int(rng.integers(-6, 7)), int(rng.integers(-6, 7))
            b = Placement(a.shape, Pose(a.pose.x + di * px, a.pose.z + dj * px, a.pose.theta))
            ra = rasterize_action(a, 64)
            rb = rasterize_action(b, 64)
            assert np.array_equal(np.roll(ra, (dj, di), axis=(0, 1)), rb)


class TestStateFeatures:
    def test_empty_assembly_is_zero(self):
        assert state_features([], 64).sum() == 0.0

    def test_additivity_disjoint(self):
        a, b = square_at(-2.0, 0.5), square_at(2.0, 0.5)
        psi = state_features([a, b], 64)
        assert psi.sum() == rasterize_action(a, 64).sum() + rasterize_action(b, 64).sum()

    def test_incremental_identity_exact(self, rng):
        placements = [square_at(0.0, 0.5)]
        psi = state_features(placements, 64)
        for k in range(1, 4):
            nxt = square_at(0.0, 0.5 + k)
            placements.append(nxt)
            psi_next = state_features(placements, 64)
            assert np.array_equal(psi_next, psi + rasterize_action(nxt, 64))
            psi = psi_next

    def test_binarity_on_valid_assemblies(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 5))
            xs = np.cumsum(np.concatenate([[rng.uniform(-2, 2)],
                                           rng.uniform(-0.45, 0.45, size=n - 1)]))
            asm = [square_at(x, 0.5 + k) for k, x in enumerate(xs)]
            psi = state_features(asm, 64)
            assert set(np.unique(psi)) <= {0.0, 1.0}


class TestTaskFeatures:
    def test_no_obstacles_channel_zero(self):
        t = simple_task([(0.0, 2.0)])
        img = task_features(t, 64)
        assert img.shape == (2, 64, 64)
        assert img[0].sum() == 0.0

    def test_target_pixel_placement(self):
        t = simple_task([(0.0, 5.0)])
        img = task_features(t, 64)
        assert img[1, 32, 32] == 1.0
        assert img[1].sum() == 1.0
        i, j = containing_pixel(0.0, 5.0, 64)
        assert (i, j) == (32, 32)

    def test_two_targets_same_pixel(self):
        t = simple_task([(0.01, 5.0), (0.02, 5.0)])
        img = task_features(t, 64)
        assert img[1].sum() == 1.0

    def test_obstacle_channel_rasterization(self):
        t = simple_task([(0.0, 9.0)], obstacles=[(0.0, 1.0, 0.5)])
        img = task_features(t, 64)
        xs, zs = pixel_axes(64)
        expect = int(np.sum(np.abs(xs) <= 0.5) * np.sum(np.abs(zs - 1.0) <= 0.5))
        assert img[0].sum() == expect


class TestRewardField:
    def test_no_targets_constant_negative(self):
        rho = reward_field(FakeTask((), ()), 2.0, 1e-3, 64)
        assert np.allclose(rho, -1e-3)

    def test_single_target_unit_mass(self):
        rho = reward_field(FakeTask(((0.0, 5.0),), ()), 2.0, 1e-3, 64)
        assert abs((rho + 1e-3).sum() - 1.0) < 1e-9

    def test_two_far_targets_mass_two(self):
        # 20 px apart = 3.125 world units
        rho = reward_field(FakeTask(((-2.0, 5.0), (1.125, 5.0)), ()), 2.0, 1e-3, 64)
        assert abs((rho + 1e-3).sum() - 2.0) < 1e-9

    def test_far_pixels_equal_minus_c(self):
        rho = reward_field(FakeTask(((-4.0, 8.0),), ()), 2.0, 1e-3, 64)
        # bottom-right corner is far beyond 6 sigma
        assert abs(rho[0, 63] + 1e-3) < 1e-12

    def test_edge_target_still_unit_mass(self):
        rho = reward_field(FakeTask(((4.9, 0.2),), ()), 2.0, 1e-3, 64)
        assert abs((rho + 1e-3).sum() - 1.0) < 1e-9


class TestReward:
    def test_flat_field_cost_only(self):
        t = simple_task([(-4.0, 8.0)])
        a = square_at(3.0, 0.5)
        npix = float(rasterize_action(a, 64).sum())
        assert math.isclose(reward(a, t), -1e-3 * npix, abs_tol=1e-12)

    def test_full_kernel_coverage(self):
        xs, zs = pixel_axes(64)
        x_c, z_c = float(xs[32]), float(zs[32])
        t = simple_task([(x_c, z_c)])
        a = square_at(x_c, z_c)
        npix = float(rasterize_action(a, 64).sum())
        r = reward(a, t, sigma_px=0.5)
        assert math.isclose(r, 1.0 - 1e-3 * npix, abs_tol=1e-9)

    def test_joint_shift_invariance(self, rng):
        # interior cases only: the truncated kernel must not clip at the border
        px = pixel_size(64)
        for _ in range(30):
            x, z = rng.uniform(-2, 2), rng.uniform(2.9, 7.0)
            di, dj = int(rng.integers(-5, 6)), int(rng.integers(-5, 6))
            t1 = simple_task([(x, z)])
            t2 = simple_task([(x + di * px, z + dj * px)])
            a1 = square_at(x, z + 0.3)
            a2 = square_at(x + di * px, z + 0.3 + dj * px)
            assert math.isclose(reward(a1, t1), reward(a2, t2), abs_tol=1e-9)

    def test_inner_product_matches_pixel_loop_oracle(self, rng):
        for _ in range(100):
            x, z = rng.uniform(-3, 3), rng.uniform(0.6, 8)
            t = simple_task([(rng.uniform(-4, 4), rng.uniform(0.5, 9))])
            a = square_at(x, z, rng.uniform(-1, 1))
            rho = reward_field(t, 2.0, 1e-3, 64)
            img = rasterize_action(a, 64)
            acc = 0.0
            for j in range(64):
                for i in range(64):
                    acc += float(img[j, i]) * float(rho[j, i])
            assert math.isclose(reward(a, t), acc, abs_tol=1e-9)


class TestQValue:
    def test_terminal_definition_chain(self):
        t = simple_task([(0.0, 0.5)])
        a = square_at(0.0, 0.5)
        rho = reward_field(t, 2.0, 1e-3, 64)
        assert math.isclose(q_value(rasterize_action(a, 64), rho), reward(a, t), abs_tol=1e-12)

    def test_zero_field(self):
        assert q_value(np.ones((8, 8)), np.zeros((8, 8))) == 0.0

    def test_linearity(self, rng):
        x = rng.normal(size=(16, 16))
        y = rng.normal(size=(16, 16))
        rho = rng.normal(size=(16, 16))
        a, b = 1.7, -0.4
        assert math.isclose(q_value(a * x + b * y, rho),
                            a * q_value(x, rho) + b * q_value(y, rho), abs_tol=1e-9)


class TestMonteCarloSuccessorFeatures:
    def test_bellman_recursion_and_return_identity(self):
        # scripted tower-building episode; no learner involved
        gamma = 0.9
        t = simple_task([(0.0, 2.5)])
        actions = [square_at(0.0, 0.5), square_at(0.0, 1.5), square_at(0.0, 2.5)]
        rewards = [reward(a, t) for a in actions]
        phis = [rasterize_action(a, 64).astype(np.float64) for a in actions]
        n = len(actions)
        psi_emp = [None] * n
        psi_emp[n - 1] = phis[n - 1]
        for k in range(n - 2, -1, -1):
            psi_emp[k] = phis[k] + gamma * psi_emp[k + 1]
        for k in range(n - 1):
            assert np.allclose(psi_emp[k], phis[k] + gamma * psi_emp[k + 1], atol=0)
        rho = reward_field(t, 2.0, 1e-3, 64)
        ret = sum(gamma ** k * rewards[k] for k in range(n))
        assert math.isclose(q_value(psi_emp[0], rho), ret, abs_tol=1e-6)


def test_save_feature_image(tmp_path):
    img = rasterize_action(square_at(0.0, 0.5), 64)
    out = tmp_path / "phi.png"
    save_feature_image(img, out)
    assert out.exists() and out.stat().st_size > 0
