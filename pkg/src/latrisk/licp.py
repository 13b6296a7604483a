"""Latency-induced collision probability: the expected collision
probability at the delayed execution time t_d = t + latency, conditioned on
the beliefs held at decision time, plus the threshold safety predicate.

Two estimators live here.  ``licp`` realizes the nested expectation: outer
draws of the obstacle state now, each propagated through the transition
model to t_d and scored with inner draws.  ``licp_flat`` jointly samples the
obstacle path to t_d in a single pass; it is the independent cross-check for
the nested estimator and collapses to the same integral for this model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .collision import RiskEstimate
from .geometry import EgoState, Pose2, Trajectory, pose_on_trajectory
from .prediction import MixtureBelief, MotionModel, _sqrt_factor, sample_poses
from .vqa_actions import PROCEED, DecisionAction


@dataclass(frozen=True)
class SafetyConfig:
    """Risk threshold and Monte-Carlo budget for delayed-risk queries."""

    lam: float = 0.3
    outer_samples: int = 200
    inner_samples: int = 100
    rollout_dt: float = 0.01

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must lie in [0, 1]")
        if self.outer_samples < 10 or self.inner_samples < 10:
            raise ValueError("sample budgets must be >= 10")


@dataclass(frozen=True)
class LatencyQuery:
    """A delayed-decision risk query: who is where at decision time, what
    the decision is, and how long it takes to land."""

    time: float
    latency: float
    action: DecisionAction
    ego: EgoState
    belief: MixtureBelief
    model: MotionModel
    ego_half_length: float = 2.25
    ego_half_width: float = 1.0
    obstacle_half_length: float = 2.25
    obstacle_half_width: float = 1.0
    trajectory: Trajectory | None = None

    def __post_init__(self):
        if self.latency < 0.0:
            raise ValueError("latency must be >= 0")
        if not math.isfinite(self.time):
            raise ValueError("time must be finite")

    @property
    def decision_time(self) -> float:
        return self.time + self.latency


def ego_pose_at(query: LatencyQuery, t_eval: float) -> Pose2:
    """Ego pose at an evaluation time under the queried decision.

    A proceed decision follows the reference trajectory (straight-line
    constant speed when no trajectory is attached).  A brake decision
    follows the reference until it applies at t + latency, then decelerates
    along the path tangent.
    """
    t0 = query.time
    if query.trajectory is not None:
        def ref(t: float) -> tuple[Pose2, float]:
            return pose_on_trajectory(query.trajectory, t)
    else:
        def ref(t: float) -> tuple[Pose2, float]:
            p = query.ego.pose
            d = query.ego.speed * (t - query.ego.time)
            return (
                Pose2(p.x + d * math.cos(p.theta), p.y + d * math.sin(p.theta), p.theta),
                query.ego.speed,
            )

    if query.action.kind == PROCEED or t_eval <= query.decision_time:
        return ref(t_eval)[0]
    # braking after the decision lands: decelerate along the path tangent
    t_apply = query.decision_time
    pose_a, v_a = ref(t_apply)
    decel = query.action.deceleration
    dt = t_eval - t_apply
    t_stop = v_a / decel if decel > 0 else math.inf
    dte = min(dt, t_stop)
    dist = v_a * dte - 0.5 * decel * dte * dte
    return Pose2(
        pose_a.x + dist * math.cos(pose_a.theta),
        pose_a.y + dist * math.sin(pose_a.theta),
        pose_a.theta,
    )


def _check_finite(query: LatencyQuery) -> None:
    arrs = [query.belief.means, query.belief.covs, np.asarray(query.model.velocity)]
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise ValueError("query contains non-finite values")


def licp(query: LatencyQuery, config: SafetyConfig, rng: np.random.Generator) -> RiskEstimate:
    """Nested Monte-Carlo estimate of the delayed collision probability.

    Outer draws sample the obstacle now; each is pushed to the decision time
    with the transition model and scored with inner draws against the ego
    pose at that time.  The standard error comes from the outer sample
    variance, so it covers both integration layers.
    """
    _check_finite(query)
    tau = query.latency
    t_d = query.decision_time
    ego_pose = ego_pose_at(query, t_d)
    k_out, k_in = config.outer_samples, config.inner_samples

    outer = sample_poses(query.belief, k_out, rng)
    drift = query.model.drift(tau)
    factor = _sqrt_factor(tau * query.model.q)
    eps = rng.standard_normal((k_out, k_in, 3))
    inner = outer[:, None, :] + drift[None, None, :] + eps @ factor.T

    ego_poses = np.broadcast_to(ego_pose.as_array(), (k_out, 3)).copy()
    fractions = kernels.rowwise_overlap_fraction(
        ego_poses,
        (query.ego_half_length, query.ego_half_width),
        inner,
        (query.obstacle_half_length, query.obstacle_half_width),
    )
    value = float(np.mean(fractions))
    if k_out > 1:
        stderr = float(np.std(fractions, ddof=1) / math.sqrt(k_out))
    else:
        stderr = 0.0
    return RiskEstimate(
        value=min(max(value, 0.0), 1.0),
        stderr=stderr,
        samples=k_out * k_in,
        method="monte-carlo",
    )


def licp_flat(
    query: LatencyQuery,
    n: int,
    rng: np.random.Generator,
) -> RiskEstimate:
    """Flat joint-sampling estimate of the same integral: each draw samples
    the obstacle now and its propagation noise to t_d in one pass."""
    _check_finite(query)
    tau = query.latency
    ego_pose = ego_pose_at(query, query.decision_time)
    base = sample_poses(query.belief, n, rng)
    drift = query.model.drift(tau)
    factor = _sqrt_factor(tau * query.model.q)
    eps = rng.standard_normal((n, 3))
    poses = base + drift[None, :] + eps @ factor.T
    hits = int(
        kernels.overlap_counts(
            ego_pose.as_array().reshape(1, 3),
            (query.ego_half_length, query.ego_half_width),
            poses,
            (query.obstacle_half_length, query.obstacle_half_width),
        )[0]
    )
    p = hits / n
    return RiskEstimate(
        value=p,
        stderr=math.sqrt(p * (1.0 - p) / n),
        samples=n,
        method="monte-carlo",
    )


def is_safe(estimate: RiskEstimate, config: SafetyConfig) -> bool:
    """Strict threshold safety: safe iff the risk value is below lam."""
    return estimate.value < config.lam
