"""Pure geometry for the 360° view and the heads-up follow behavior.

Conventions (shared with the compiled render kernel and the browser
console): right-handed coordinates, +y up, yaw 0 / pitch 0 looks along -z.
Positive yaw turns the view right, positive pitch up.  Equirectangular
texture coordinates put u=0.5, v=0.5 at the forward direction, v=0 at the
zenith.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .model import ViewPose, _wrap_angle

POLE_EPS = 1e-12

# The heads-up UI trails the head by half a second, then eases in
# exponentially.  The delay is a product constant; the time constant of
# the easing is configurable.
FOLLOW_DELAY_US = 500_000
FOLLOW_TAU_US = 150_000


def dir_to_uv(d: tuple[float, float, float]) -> tuple[float, float]:
    """Map a unit direction to equirectangular texture coordinates.

    u = atan2(x, -z) / 2pi + 0.5 and v = 0.5 - asin(y) / pi; at the poles
    (|y| >= 1 - 1e-12) u is fixed at 0.5 so the mapping stays a function.
    """
    x, y, z = d
    if y >= 1.0 - POLE_EPS or y <= -1.0 + POLE_EPS:
        u = 0.5
    else:
        u = math.atan2(x, -z) / math.tau + 0.5
    v = 0.5 - math.asin(max(-1.0, min(1.0, y))) / math.pi
    return (u, v)


def uv_to_dir(u: float, v: float) -> tuple[float, float, float]:
    """Inverse of :func:`dir_to_uv` away from the poles; always unit-norm."""
    theta = (u - 0.5) * math.tau
    phi = (0.5 - v) * math.pi
    cphi = math.cos(phi)
    return (cphi * math.sin(theta), math.sin(phi), -cphi * math.cos(theta))


def rotate(pose: ViewPose, v: tuple[float, float, float]) -> tuple[float, float, float]:
    """Apply a pose to a camera-space vector: roll, then pitch, then yaw."""
    x, y, z = v
    cr, sr = math.cos(pose.roll), math.sin(pose.roll)
    x, y = cr * x - sr * y, sr * x + cr * y
    cp, sp = math.cos(pose.pitch), math.sin(pose.pitch)
    y, z = cp * y - sp * z, sp * y + cp * z
    cy, sy = math.cos(pose.yaw), math.sin(pose.yaw)
    x, z = cy * x - sy * z, sy * x + cy * z
    return (x, y, z)


def viewport_ray(
    pose: ViewPose,
    fov_deg: float,
    ndc: tuple[float, float],
    aspect: float = 1.0,
) -> tuple[float, float, float]:
    """World-space unit ray through a viewport point.

    ``ndc`` is (px, py) in [-1, 1]^2 with py up; ``fov_deg`` is the vertical
    field of view, in (10, 170) degrees.
    """
    if not 10.0 < fov_deg < 170.0:
        raise ValueError(f"fov_deg out of range: {fov_deg}")
    px, py = ndc
    t = math.tan(math.radians(fov_deg) / 2.0)
    x, y, z = px * t * aspect, py * t, -1.0
    n = math.sqrt(x * x + y * y + z * z)
    return rotate(pose, (x / n, y / n, z / n))


def _lerp_angle(a: float, b: float, t: float) -> float:
    return _wrap_angle(a + _wrap_angle(b - a) * t)


def _lerp_pose(a: ViewPose, b: ViewPose, t: float) -> ViewPose:
    return ViewPose(
        yaw=_lerp_angle(a.yaw, b.yaw, t),
        pitch=a.pitch + (b.pitch - a.pitch) * t,
        roll=_lerp_angle(a.roll, b.roll, t),
    )


@dataclass
class FollowState:
    """Delayed smooth-follow filter for the heads-up UI pose.

    The UI pose chases the head pose as it was ``delay_us`` ago (linear
    interpolation in the recorded history, shortest-arc per angle), easing
    by a factor of 1 - exp(-dt/tau) per step.  The UI pose is therefore a
    function only of head poses at least ``delay_us`` old.
    """

    ui_pose: ViewPose = ViewPose()
    delay_us: int = FOLLOW_DELAY_US
    tau_us: int = FOLLOW_TAU_US
    history: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.tau_us <= 0:
            raise ValueError("tau_us must be positive")


def follow_step(fs: FollowState, head: ViewPose, t_us: int) -> FollowState:
    """Advance the follow filter to time ``t_us`` with a new head sample.

    Timestamps must strictly increase.  Returns a new state; the input is
    not modified.
    """
    if fs.history and t_us <= fs.history[-1][0]:
        raise ValueError("history timestamps must strictly increase")
    history = deque(fs.history)
    prev_t = history[-1][0] if history else None
    history.append((t_us, head))

    target_t = t_us - fs.delay_us
    target = _delayed_pose(history, target_t, fs.ui_pose)

    if prev_t is None:
        ui = fs.ui_pose
    else:
        alpha = 1.0 - math.exp(-(t_us - prev_t) / fs.tau_us)
        ui = _lerp_pose(fs.ui_pose, target, alpha)

    # Keep just enough history to interpolate at t - delay next time.
    while len(history) > 2 and history[1][0] <= t_us - fs.delay_us:
        history.popleft()
    return FollowState(ui_pose=ui, delay_us=fs.delay_us, tau_us=fs.tau_us, history=history)


def _delayed_pose(history, target_t: int, fallback: ViewPose) -> ViewPose:
    """Head pose at target_t by linear interpolation in the sample history."""
    if not history or target_t < history[0][0]:
        # Nothing known that far back yet: hold the current UI pose.
        return fallback
    prev = history[0]
    for t, pose in history:
        if t == target_t:
            return pose
        if t > target_t:
            t0, p0 = prev
            span = t - t0
            return _lerp_pose(p0, pose, (target_t - t0) / span)
        prev = (t, pose)
    return history[-1][1]
