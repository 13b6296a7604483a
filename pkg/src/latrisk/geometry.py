"""SE(2) poses, oriented-rectangle footprints, exact intersection tests,
ego kinematics and reference-trajectory lookup.

This is the geometric substrate every probability computation builds on:
vehicles are oriented rectangles on a bird's-eye-view plane, and the ego
advances under a kinematic unicycle with a curvature + acceleration command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

TAU = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(theta, TAU)
    if w <= -math.pi:
        w += TAU
    return w


@dataclass(frozen=True)
class Pose2:
    """Planar pose (x, y, heading); heading is wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=np.float64)


@dataclass(frozen=True)
class Footprint:
    """Oriented rectangle occupancy: center pose plus half extents.

    half_length runs along the heading axis and must be >= half_width > 0.
    """

    center: Pose2
    half_length: float
    half_width: float

    def __post_init__(self):
        if not (self.half_length >= self.half_width > 0.0):
            raise ValueError("require half_length >= half_width > 0")

    def corners(self) -> np.ndarray:
        """4x2 corner coordinates, counter-clockwise."""
        c, s = math.cos(self.center.theta), math.sin(self.center.theta)
        hl, hw = self.half_length, self.half_width
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.center.x, self.center.y])


@dataclass(frozen=True)
class EgoState:
    pose: Pose2
    speed: float
    time: float

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("speed must be >= 0")


@dataclass(frozen=True)
class ObstacleState:
    """One observed dynamic obstacle: pose, planar velocity and rectangle extents."""

    id: str
    pose: Pose2
    velocity: tuple[float, float]
    half_length: float = 2.25
    half_width: float = 1.0


@dataclass(frozen=True)
class ControlCommand:
    """Ego command: path curvature (1/m) and longitudinal acceleration (m/s^2)."""

    curvature: float = 0.0
    accel: float = 0.0


def rect_intersects(a: Footprint, b: Footprint) -> bool:
    """True iff two oriented rectangles overlap or touch (separating-axis test)."""
    return kernels.overlap_single(
        a.center.as_array(), (a.half_length, a.half_width),
        b.center.as_array(), (b.half_length, b.half_width),
    )


def rect_clearance(a: Footprint, b: Footprint) -> float:
    """Minimum separation distance between two rectangles; 0 when they overlap."""
    return kernels.clearance(
        a.center.as_array(), (a.half_length, a.half_width),
        b.center.as_array(), (b.half_length, b.half_width),
    )


def step_ego(state: EgoState, command: ControlCommand, dt: float) -> EgoState:
    """Advance the ego one step under a kinematic unicycle model.

    Speed integrates the commanded acceleration and clamps at zero (braking
    never reverses).  Position uses the trapezoidal mid-speed over the step,
    which makes constant-deceleration stopping distances match v^2/(2a)
    exactly; heading follows the commanded curvature along the travelled arc.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if not (math.isfinite(command.curvature) and math.isfinite(command.accel)):
        raise ValueError("command values must be finite")
    v0 = state.speed
    v1 = max(0.0, v0 + command.accel * dt)
    # time actually spent moving when the brake reaches zero mid-step
    if command.accel < 0.0 and v1 == 0.0 and v0 > 0.0:
        t_move = v0 / -command.accel
    else:
        t_move = dt
    ds = 0.5 * (v0 + v1) * t_move
    th0 = state.pose.theta
    dth = command.curvature * ds
    if abs(dth) < 1e-12:
        dx = ds * math.cos(th0)
        dy = ds * math.sin(th0)
    else:
        k = command.curvature
        dx = (math.sin(th0 + dth) - math.sin(th0)) / k
        dy = -(math.cos(th0 + dth) - math.cos(th0)) / k
    pose = Pose2(state.pose.x + dx, state.pose.y + dy, th0 + dth)
    return EgoState(pose=pose, speed=v1, time=state.time + dt)


class Trajectory:
    """Time-indexed reference trajectory with uniform sampling step.

    Stores parallel arrays (times, x, y, theta, speed).  Times must be
    strictly increasing with uniform spacing equal to the simulation step.
    """

    def __init__(self, times, xs, ys, thetas, speeds):
        self.times = np.asarray(times, dtype=np.float64)
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        self.thetas = np.asarray(thetas, dtype=np.float64)
        self.speeds = np.asarray(speeds, dtype=np.float64)
        n = len(self.times)
        if n < 2:
            raise ValueError("trajectory needs at least two samples")
        steps = np.diff(self.times)
        if np.any(steps <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=0.0, atol=1e-9):
            raise ValueError("trajectory sampling must be uniform")
        self.dt = float(steps[0])
        for arr in (self.xs, self.ys, self.thetas, self.speeds):
            if len(arr) != n:
                raise ValueError("trajectory arrays must share one length")

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def sample(self, t: float) -> tuple[Pose2, float]:
        return pose_on_trajectory(self, t)

    def arc_lengths(self) -> np.ndarray:
        d = np.hypot(np.diff(self.xs), np.diff(self.ys))
        return np.concatenate([[0.0], np.cumsum(d)])

    def project(self, x: float, y: float) -> float:
        """Arc length of the trajectory sample nearest to (x, y)."""
        d2 = (self.xs - x) ** 2 + (self.ys - y) ** 2
        return float(self.arc_lengths()[int(np.argmin(d2))])


def pose_on_trajectory(traj: Trajectory, t: float) -> tuple[Pose2, float]:
    """Linear interpolation on the trajectory; headings take the shorter arc.

    Out-of-range times are an error: the reference never extrapolates.
    """
    if t < traj.start - 1e-9 or t > traj.end + 1e-9:
        raise ValueError(f"time {t} outside trajectory [{traj.start}, {traj.end}]")
    t = min(max(t, traj.start), traj.end)
    idx = int(np.searchsorted(traj.times, t, side="right")) - 1
    idx = min(max(idx, 0), len(traj.times) - 2)
    t0, t1 = traj.times[idx], traj.times[idx + 1]
    frac = (t - t0) / (t1 - t0)
    if frac < 1e-12:
        return (
            Pose2(float(traj.xs[idx]), float(traj.ys[idx]), float(traj.thetas[idx])),
            float(traj.speeds[idx]),
        )
    x = traj.xs[idx] + frac * (traj.xs[idx + 1] - traj.xs[idx])
    y = traj.ys[idx] + frac * (traj.ys[idx + 1] - traj.ys[idx])
    dth = wrap_angle(traj.thetas[idx + 1] - traj.thetas[idx])
    th = wrap_angle(traj.thetas[idx] + frac * dth)
    v = traj.speeds[idx] + frac * (traj.speeds[idx + 1] - traj.speeds[idx])
    return Pose2(float(x), float(y), float(th)), float(v)
