"""The shared-autonomy decision layer: query triggering, templated question
generation, answer parsing into control actions, feasibility validation, and
the two simulated operator policies used by the evaluation harness.

The two policies differ in one thing only: the baseline scores the positive
action on the current schedule, ignoring latency, while the latency-aware
operator scores it at the delayed execution time the decision will actually
land at.  Both sweep the post-decision window the harness configures and
answer negative when the risk estimate reaches the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .collision import RiskEstimate
from .geometry import EgoState, Pose2, Trajectory
from .licom import RiskGrid
from .licp import LatencyQuery, SafetyConfig, licp
from .prediction import MixtureBelief, MotionModel, _sqrt_factor, sample_poses
from .vqa_actions import BRAKE, PROCEED, WAYPOINT, DecisionAction

BASELINE = "baseline"
LAVQA = "lavqa"


@dataclass(frozen=True)
class QueryTemplate:
    """Scenario question template with its closed answer set.

    The first option is the positive (continue) action; every other option
    maps to the yield action."""

    question: str
    options: tuple[str, ...]
    brake_decel: float = 6.0
    allow_waypoint: bool = False

    def action_for(self, option: str) -> DecisionAction:
        if option not in self.options:
            raise ValueError(f"option {option!r} not in template")
        if option == self.options[0]:
            return DecisionAction(kind=PROCEED)
        return DecisionAction(kind=BRAKE, deceleration=self.brake_decel)


SCENARIO_TEMPLATES = {
    "merge": QueryTemplate(
        question="On-ramp gap selection: should I merge now?",
        options=("merge", "hold"),
    ),
    "right-turn": QueryTemplate(
        question="Can I turn right before cross-traffic?",
        options=("turn", "yield"),
    ),
    "left-turn": QueryTemplate(
        question="Is the current left-turn gap sufficient to cross?",
        options=("go", "wait"),
    ),
}


@dataclass(frozen=True)
class VisualQuery:
    id: str
    issue_time: float
    question: str
    options: tuple[str, ...]
    scene_ref: str | None = None
    grid: RiskGrid | None = None

    def __post_init__(self):
        if len(self.options) < 2:
            raise ValueError("a query needs at least two answer options")


@dataclass(frozen=True)
class OperatorAnswer:
    query_id: str
    option: str | None
    answered_at: float
    waypoint: Pose2 | None = None

    def __post_init__(self):
        if (self.option is None) == (self.waypoint is None):
            raise ValueError("answer carries exactly one of option or waypoint")


@dataclass(frozen=True)
class SceneView:
    """What the decision layer sees at one instant: the ego, the tracked
    obstacle belief and the shapes involved."""

    time: float
    ego: EgoState
    belief: MixtureBelief | None
    model: MotionModel | None
    ego_half_length: float = 2.25
    ego_half_width: float = 1.0
    obstacle_half_length: float = 2.25
    obstacle_half_width: float = 1.0


@dataclass(frozen=True)
class TriggerConfig:
    """Trigger sensitivity: probe cadence along the reference plan and the
    threshold a probe must reach to open a query."""

    lam_trig: float = 0.15
    probe_interval: float = 0.5
    horizon_probes: int = 40
    samples: int = 2000


def _probe_risks(
    scene: SceneView,
    trajectory: Trajectory,
    offsets: np.ndarray,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Collision probability of the reference plan at now + offsets.

    One base draw is reused across probes: each probe shifts it by the
    model drift and the propagated covariance for its lookahead.
    """
    belief, model = scene.belief, scene.model
    k = len(offsets)
    ego_poses = np.empty((k, 3))
    for i, dt in enumerate(offsets):
        pose, _ = trajectory.sample(scene.time + dt)
        ego_poses[i] = pose.as_array()

    base = sample_poses(belief, samples, rng)
    eps = rng.standard_normal((samples, 3))
    obs = np.empty((k, samples, 3))
    for i, dt in enumerate(offsets):
        drift = model.drift(float(dt))
        factor = _sqrt_factor(float(dt) * model.q)
        obs[i] = base + drift[None, :] + eps @ factor.T

    return kernels.rowwise_overlap_fraction(
        ego_poses,
        (scene.ego_half_length, scene.ego_half_width),
        obs,
        (scene.obstacle_half_length, scene.obstacle_half_width),
    )


def should_trigger(
    scene: SceneView,
    trajectory: Trajectory,
    config: TriggerConfig,
    rng: np.random.Generator,
) -> bool:
    """True when any probe of the reference plan, taken at the configured
    cadence over the planning horizon, reaches the trigger threshold."""
    if scene.belief is None or scene.model is None:
        return False
    horizon = config.horizon_probes * config.probe_interval
    offsets = np.arange(0.0, horizon + 1e-9, config.probe_interval)
    offsets = offsets[scene.time + offsets <= trajectory.end + 1e-9]
    if len(offsets) == 0:
        return False
    risks = _probe_risks(scene, trajectory, offsets, config.samples, rng)
    return bool(np.any(risks >= config.lam_trig))


def generate_query(
    scene: SceneView,
    template: QueryTemplate,
    query_id: str,
    grid: RiskGrid | None = None,
) -> VisualQuery:
    """Fill the scenario template into a concrete query; the risk map rides
    along only in latency-aware mode."""
    return VisualQuery(
        id=query_id,
        issue_time=scene.time,
        question=template.question,
        options=template.options,
        grid=grid,
    )


def parse_answer(
    answer: OperatorAnswer, query: VisualQuery, template: QueryTemplate
) -> DecisionAction:
    """Map an operator answer onto its decision action.

    Unknown options are rejected, as are waypoint answers on queries whose
    template only admits the discrete options."""
    if answer.query_id != query.id:
        raise ValueError("answer does not reference this query")
    if answer.waypoint is not None:
        if not template.allow_waypoint:
            raise ValueError("waypoint answer on a discrete-only query")
        return DecisionAction(kind=WAYPOINT, waypoint=answer.waypoint)
    if answer.option not in query.options:
        raise ValueError(f"unknown option {answer.option!r}")
    return template.action_for(answer.option)


@dataclass(frozen=True)
class FeasibilityResult:
    accepted: bool
    reason: str | None = None


def validate_feasibility(
    action: DecisionAction,
    state: EgoState,
    trajectory: Trajectory | None = None,
    max_curvature: float = 0.2,
    max_decel: float = 9.0,
) -> FeasibilityResult:
    """Reject waypoints that are outdated (at or behind the ego's arc-length
    position) or physically infeasible; brake and proceed always pass."""
    if action.kind in (PROCEED, BRAKE):
        return FeasibilityResult(True)
    wp = action.waypoint
    if trajectory is not None:
        s_ego = trajectory.project(state.pose.x, state.pose.y)
        s_wp = trajectory.project(wp.x, wp.y)
        if s_wp <= s_ego + 1e-9:
            return FeasibilityResult(False, "outdated")
    # curvature needed to reach the waypoint from the current heading
    dx = wp.x - state.pose.x
    dy = wp.y - state.pose.y
    dist2 = dx * dx + dy * dy
    if dist2 < 1e-12:
        return FeasibilityResult(False, "outdated")
    c, s = math.cos(state.pose.theta), math.sin(state.pose.theta)
    x_rel = c * dx + s * dy
    y_rel = -s * dx + c * dy
    if x_rel <= 0.0:
        return FeasibilityResult(False, "outdated")
    curvature = 2.0 * y_rel / dist2
    if abs(curvature) > max_curvature:
        return FeasibilityResult(False, "infeasible")
    # deceleration to come to rest at the waypoint
    dist = math.sqrt(dist2)
    required = state.speed * state.speed / (2.0 * dist)
    if required > max_decel:
        return FeasibilityResult(False, "infeasible")
    return FeasibilityResult(True)


@dataclass(frozen=True)
class OperatorConfig:
    """Post-decision assessment window for the simulated operator."""

    window: float = 2.0
    probe_dt: float = 0.25


def perceived_risk(
    scene: SceneView,
    trajectory: Trajectory,
    mode: str,
    tau: float,
    safety: SafetyConfig,
    operator: OperatorConfig,
    rng: np.random.Generator,
) -> RiskEstimate:
    """The risk the simulated operator acts on for the positive action.

    The baseline anchors the assessment window at the issue time, assuming
    immediate execution; the latency-aware operator anchors it at the
    delayed execution time t_d = t + tau, which is exactly the information
    the risk map presents.  Both take the maximum delayed-collision
    probability over the window probes; at tau = 0 they coincide.
    """
    if mode not in (BASELINE, LAVQA):
        raise ValueError(f"unknown operator mode {mode!r}")
    anchor = tau if mode == LAVQA else 0.0
    offsets = anchor + np.arange(0.0, operator.window + 1e-9, operator.probe_dt)
    offsets = offsets[scene.time + offsets <= trajectory.end + 1e-9]
    if len(offsets) == 0:
        offsets = np.array([min(anchor, trajectory.end - scene.time)])
    best: RiskEstimate | None = None
    for dt in offsets:
        query = LatencyQuery(
            time=scene.time,
            latency=float(dt),
            action=DecisionAction(kind=PROCEED),
            ego=scene.ego,
            belief=scene.belief,
            model=scene.model,
            ego_half_length=scene.ego_half_length,
            ego_half_width=scene.ego_half_width,
            obstacle_half_length=scene.obstacle_half_length,
            obstacle_half_width=scene.obstacle_half_width,
            trajectory=trajectory,
        )
        est = licp(query, safety, rng)
        if best is None or est.value > best.value:
            best = est
    return best


def simulated_operator(
    query: VisualQuery,
    mode: str,
    scene: SceneView,
    trajectory: Trajectory,
    tau: float,
    safety: SafetyConfig,
    operator: OperatorConfig,
    rng: np.random.Generator,
) -> tuple[OperatorAnswer, RiskEstimate]:
    """Best-effort simulated operator: answers the negative option when the
    perceived collision probability for the positive action reaches lam."""
    est = perceived_risk(scene, trajectory, mode, tau, safety, operator, rng)
    option = query.options[0] if est.value < safety.lam else query.options[1]
    answer = OperatorAnswer(query_id=query.id, option=option, answered_at=query.issue_time)
    return answer, est
