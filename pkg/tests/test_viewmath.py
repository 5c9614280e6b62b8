"""Equirect mapping, viewport rays, and the delayed follow filter."""

import math
import random

import pytest

from svrs import viewmath as vm
from svrs.model import ViewPose


def test_anchor_vectors():
    assert vm.dir_to_uv((0.0, 0.0, -1.0)) == (0.5, 0.5)
    assert vm.dir_to_uv((0.0, 1.0, 0.0)) == (0.5, 0.0)
    assert vm.dir_to_uv((1.0, 0.0, 0.0)) == (0.75, 0.5)
    assert vm.dir_to_uv((0.0, -1.0, 0.0)) == (0.5, 1.0)


def test_uv_to_dir_anchors():
    x, y, z = vm.uv_to_dir(0.5, 0.5)
    assert abs(x) < 1e-15 and abs(y) < 1e-15 and abs(z + 1) < 1e-15
    x, y, z = vm.uv_to_dir(0.75, 0.5)
    assert abs(x - 1) < 1e-15 and abs(y) < 1e-15 and abs(z) < 1e-15


def test_round_trip_uv_dir_uv():
    rng = random.Random(1)
    worst = 0.0
    for _ in range(20_000):
        u = rng.random()
        v = rng.uniform(0.01, 0.99)
        d = vm.uv_to_dir(u, v)
        n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
        assert abs(n - 1.0) < 1e-12
        u2, v2 = vm.dir_to_uv(d)
        worst = max(worst, abs(u2 - u), abs(v2 - v))
    assert worst < 1e-9


def test_seam_continuity():
    for eps in (1e-6, 1e-9):
        a = vm.uv_to_dir(eps, 0.4)
        b = vm.uv_to_dir(1 - eps, 0.4)
        gap = math.dist(a, b)
        assert gap < 20 * eps


def test_viewport_center_ray_identity():
    d = vm.viewport_ray(ViewPose(), 90.0, (0.0, 0.0))
    assert math.dist(d, (0.0, 0.0, -1.0)) < 1e-12


def test_viewport_center_ray_yaw_quarter():
    d = vm.viewport_ray(ViewPose(yaw=math.pi / 2), 90.0, (0.0, 0.0))
    assert math.dist(d, (1.0, 0.0, 0.0)) < 1e-12


def test_viewport_ray_unit_norm():
    rng = random.Random(2)
    for _ in range(2000):
        pose = ViewPose.from_angles(
            rng.uniform(-10, 10), rng.uniform(-3, 3), rng.uniform(-10, 10)
        )
        d = vm.viewport_ray(
            pose,
            rng.uniform(11, 169),
            (rng.uniform(-1, 1), rng.uniform(-1, 1)),
            aspect=rng.uniform(0.5, 2.0),
        )
        assert abs(math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) - 1.0) < 1e-12


def test_viewport_ray_fov_range():
    with pytest.raises(ValueError):
        vm.viewport_ray(ViewPose(), 5.0, (0.0, 0.0))


def test_pose_normalization():
    p = ViewPose.from_angles(3 * math.pi, 2.0, -3 * math.pi)
    assert -math.pi < p.yaw <= math.pi
    assert abs(p.pitch - math.pi / 2) < 1e-12
    assert -math.pi < p.roll <= math.pi


# ---------------------------------------------------------------------------
# Follow filter


def run_follow(fs, samples):
    for t_us, pose in samples:
        fs = vm.follow_step(fs, pose, t_us)
    return fs


def step_samples(dt_us, until_us, step_at_us=0, before=0.0, after=math.pi / 2):
    t = -500_000
    out = []
    while t <= until_us:
        yaw = after if t >= step_at_us else before
        out.append((t, ViewPose(yaw=yaw)))
        t += dt_us
    return out


def test_constant_pose_is_fixed_point():
    pose = ViewPose(yaw=1.0, pitch=0.3, roll=-0.5)
    fs = vm.FollowState(ui_pose=pose)
    fs = run_follow(fs, [(i * 10_000, pose) for i in range(200)])
    assert abs(fs.ui_pose.yaw - pose.yaw) < 1e-6
    assert abs(fs.ui_pose.pitch - pose.pitch) < 1e-6
    assert abs(fs.ui_pose.roll - pose.roll) < 1e-6


def test_convergence_to_constant_pose_from_origin():
    pose = ViewPose(yaw=0.8)
    fs = vm.FollowState()
    fs = run_follow(fs, [(i * 5_000, pose) for i in range(600)])  # 3 s
    assert abs(fs.ui_pose.yaw - pose.yaw) < 1e-6


def test_zero_response_before_delay_exact():
    # 10 ms sampling divides the 500 ms delay exactly.
    fs = vm.FollowState()
    for t_us, pose in step_samples(10_000, 490_000):
        fs = vm.follow_step(fs, pose, t_us)
        assert fs.ui_pose.yaw == 0.0, f"moved at t={t_us}"


def test_step_residual_bound_at_five_tau():
    fs = vm.FollowState()
    fs = run_follow(fs, step_samples(10_000, 1_250_000))
    residual = abs(fs.ui_pose.yaw - math.pi / 2)
    assert residual < 0.011
    assert residual < math.exp(-5) * (math.pi / 2) * 1.001


def test_follow_error_monotone_after_delay():
    fs = vm.FollowState()
    target = math.pi / 2
    prev_err = None
    for t_us, pose in step_samples(10_000, 2_000_000):
        fs = vm.follow_step(fs, pose, t_us)
        if t_us >= 500_000:
            err = abs(fs.ui_pose.yaw - target)
            if prev_err is not None:
                assert err <= prev_err + 1e-15
            prev_err = err


def test_follow_shortest_arc_across_seam():
    # Head snaps from just-under +pi to just-over -pi; the UI must cross
    # the seam (short way), never swing the long way through 0.
    fs = vm.FollowState(ui_pose=ViewPose(yaw=3.0))
    samples = []
    t = -500_000
    while t <= 1_500_000:
        yaw = 3.0 if t < 0 else -3.0
        samples.append((t, ViewPose(yaw=yaw)))
        t += 10_000
    for t_us, pose in samples:
        fs = vm.follow_step(fs, pose, t_us)
        assert abs(fs.ui_pose.yaw) > 2.9  # stays near the seam
    assert abs(vm._wrap_angle(fs.ui_pose.yaw - (-3.0))) < 0.02


def test_timestamps_must_increase():
    fs = vm.FollowState()
    fs = vm.follow_step(fs, ViewPose(), 1000)
    with pytest.raises(ValueError):
        vm.follow_step(fs, ViewPose(), 1000)
