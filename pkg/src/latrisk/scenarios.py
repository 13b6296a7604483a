"""Closed-loop evaluation harness: three traffic-conflict scenarios
(merge, right turn, left turn), randomized paired trials, the simulated
operator in both policies, perceived-risk traces and batch reports.

Scenario geometry is parameterized lane centerlines: the ego approaches
straight, performs its maneuver (lateral merge blend or a quarter-turn arc)
and continues straight, while one obstacle follows a fixed lane at constant
speed.  Paired batches share per-trial scenes through a common master seed,
so policy comparisons are trial-by-trial.
"""

from __future__ import annotations

import hashlib
import json
import math
import time as _time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .geometry import (
    EgoState,
    Footprint,
    ObstacleState,
    Pose2,
    Trajectory,
    rect_clearance,
    wrap_angle,
)
from .latency import DecisionQueue, LatencyModel, draw_latency
from .licp import SafetyConfig
from .prediction import DEFAULT_MEAS_NOISE, MixtureBelief, MotionModel, single_mode
from .vqa import (
    BASELINE,
    LAVQA,
    SCENARIO_TEMPLATES,
    OperatorConfig,
    QueryTemplate,
    SceneView,
    TriggerConfig,
    VisualQuery,
    _probe_risks,
    generate_query,
    parse_answer,
    should_trigger,
    simulated_operator,
    validate_feasibility,
)
from .vqa_actions import BRAKE, DecisionAction

SCENARIOS = ("merge", "right-turn", "left-turn")
POLICIES = (BASELINE, LAVQA, "none", "live")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one trial depends on; JSON-serializable and digestible."""

    scenario: str = "merge"
    policy: str = LAVQA
    # geometry and phases
    approach_distance: float = 90.0
    straight_duration: float = 5.0
    maneuver_duration: float = 2.5
    post_duration: float = 2.0
    lane_width: float = 3.5
    obstacle_spawn_distance: float | None = None
    # simulation
    dt: float = 0.01
    time_cap: float = 12.0
    # randomization (None picks the per-scenario default)
    ego_speed_jitter: float = 0.5
    obstacle_speed_range: tuple[float, float] | None = None
    obstacle_spawn_jitter: float | None = None
    # risk engine
    lam: float = 0.3
    outer_samples: int = 200
    inner_samples: int = 100
    operator_inner: int = 40
    mc_samples: int = 20000
    process_noise: tuple[float, float, float] = (0.15, 0.15, 0.01)
    # trigger and operator
    lam_trig: float = 0.15
    trigger_interval: float = 0.5
    trigger_horizon_probes: int = 10
    trigger_period: float = 0.1
    trigger_samples: int = 2000
    trigger_hot_window: float = 0.5
    operator_window: float | None = None
    operator_probe_dt: float | None = None
    # query template (None uses the scenario default wording)
    question: str | None = None
    options: tuple[str, str] | None = None
    # latency
    latency_human: float | tuple[float, float] = 0.2
    latency_network: float | tuple[float, float] = 0.0
    # vehicle
    ego_half_length: float = 2.25
    ego_half_width: float = 1.0
    obstacle_half_length: float = 2.25
    obstacle_half_width: float = 1.0
    brake_decel: float = 6.0
    # batch
    trials: int = 100
    master_seed: int = 2024
    workers: int = 8
    record_trace: bool = False
    no_obstacle: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.dt != 0.01:
            raise ValueError("simulation step is fixed at 0.01 s")
        for d in (self.straight_duration, self.maneuver_duration, self.post_duration):
            if d <= 0.0:
                raise ValueError("phase durations must be > 0")

    @property
    def nominal_speed(self) -> float:
        return self.approach_distance / self.straight_duration

    @property
    def spawn_distance(self) -> float:
        if self.obstacle_spawn_distance is not None:
            return self.obstacle_spawn_distance
        return {"merge": 90.0, "right-turn": 30.0, "left-turn": 72.0}[self.scenario]

    @property
    def speed_range(self) -> tuple[float, float]:
        if self.obstacle_speed_range is not None:
            return self.obstacle_speed_range
        return {"merge": (8.5, 9.5), "right-turn": (6.0, 12.0),
                "left-turn": (9.75, 10.25)}[self.scenario]

    @property
    def spawn_jitter(self) -> float:
        if self.obstacle_spawn_jitter is not None:
            return self.obstacle_spawn_jitter
        return {"merge": 4.0, "right-turn": 10.0, "left-turn": 2.5}[self.scenario]

    @property
    def window(self) -> float:
        if self.operator_window is not None:
            return self.operator_window
        return {"merge": 2.4, "right-turn": 1.15, "left-turn": 1.875}[self.scenario]

    @property
    def probe_dt(self) -> float:
        if self.operator_probe_dt is not None:
            return self.operator_probe_dt
        return {"merge": 0.25, "right-turn": 0.25, "left-turn": 0.125}[self.scenario]

    def safety(self) -> SafetyConfig:
        return SafetyConfig(lam=self.lam, outer_samples=self.outer_samples,
                            inner_samples=self.inner_samples, rollout_dt=self.dt)

    def operator_safety(self) -> SafetyConfig:
        return SafetyConfig(lam=self.lam, outer_samples=self.outer_samples,
                            inner_samples=self.operator_inner, rollout_dt=self.dt)

    def trigger(self) -> TriggerConfig:
        return TriggerConfig(lam_trig=self.lam_trig, probe_interval=self.trigger_interval,
                             horizon_probes=self.trigger_horizon_probes,
                             samples=self.trigger_samples)

    def operator(self) -> OperatorConfig:
        return OperatorConfig(window=self.window, probe_dt=self.probe_dt)

    def template(self) -> "QueryTemplate":
        base = SCENARIO_TEMPLATES[self.scenario]
        if self.question is None and self.options is None:
            return base
        return QueryTemplate(
            question=self.question or base.question,
            options=tuple(self.options) if self.options else base.options,
            brake_decel=self.brake_decel,
        )

    def latency_model(self) -> LatencyModel:
        return LatencyModel(human=self.latency_human, network=self.latency_network)

    def motion_model(self, velocity: tuple[float, float]) -> MotionModel:
        return MotionModel(q=np.diag(self.process_noise), velocity=velocity)

    def to_json(self) -> str:
        def default(o):
            raise TypeError(o)

        return json.dumps(asdict(self), sort_keys=True, default=default)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        data = json.loads(text)
        for key in ("obstacle_speed_range", "process_noise", "latency_human",
                    "latency_network", "options"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return cls(**data)

    def digest(self) -> str:
        # identifies the experiment: execution knobs (worker count) excluded
        data = json.loads(self.to_json())
        data.pop("workers", None)
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# lane paths
# ---------------------------------------------------------------------------

class LanePath:
    """Arc-length-parameterized centerline built from a dense polyline."""

    def __init__(self, xs, ys, ds: float):
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        dx = np.gradient(self.xs)
        dy = np.gradient(self.ys)
        heading = np.arctan2(dy, dx)
        self.headings = np.unwrap(heading)
        seg = np.hypot(np.diff(self.xs), np.diff(self.ys))
        self.s = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.s[-1])

    def pose_at(self, s: float) -> Pose2:
        s = min(max(s, 0.0), self.length)
        x = float(np.interp(s, self.s, self.xs))
        y = float(np.interp(s, self.s, self.ys))
        th = wrap_angle(float(np.interp(s, self.s, self.headings)))
        return Pose2(x, y, th)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    return u * u * (3.0 - 2.0 * u)


def build_ego_path(config: ScenarioConfig) -> LanePath:
    """The ego centerline: approach straight, maneuver, post segment.

    Maneuver geometry is anchored at the nominal speed so the merge point
    sits exactly approach_distance metres from the start.
    """
    v = config.nominal_speed
    ds = 0.05
    approach = config.approach_distance
    man_len = v * config.maneuver_duration
    post_len = v * config.post_duration
    lane = config.lane_width

    xs_a = np.arange(-approach, 0.0, ds)
    ys_a = np.zeros_like(xs_a)

    if config.scenario == "merge":
        xs_m = np.arange(0.0, man_len, ds)
        ys_m = lane * _smoothstep(xs_m / man_len)
        xs_p = np.arange(man_len, man_len + post_len + ds, ds)
        ys_p = np.full_like(xs_p, lane)
        xs = np.concatenate([xs_a, xs_m, xs_p])
        ys = np.concatenate([ys_a, ys_m, ys_p])
        return LanePath(xs, ys, ds)

    radius = man_len / (math.pi / 2.0)
    phis = np.arange(0.0, math.pi / 2.0, ds / radius)
    if config.scenario == "right-turn":
        xs_m = radius * np.sin(phis)
        ys_m = -radius * (1.0 - np.cos(phis))
        ys_p = np.arange(-radius, -radius - post_len - ds, -ds)
        xs_p = np.full_like(ys_p, radius)
    else:  # left-turn
        xs_m = radius * np.sin(phis)
        ys_m = radius * (1.0 - np.cos(phis))
        ys_p = np.arange(radius, radius + post_len + ds, ds)
        xs_p = np.full_like(ys_p, radius)
    xs = np.concatenate([xs_a, xs_m, xs_p])
    ys = np.concatenate([ys_a, ys_m, ys_p])
    return LanePath(xs, ys, ds)


def obstacle_start(config: ScenarioConfig, spawn_jitter: float) -> tuple[Pose2, tuple[float, float]]:
    """Spawn pose and unit direction of the obstacle lane for a scenario."""
    d = config.spawn_distance + spawn_jitter
    v = config.nominal_speed
    lane = config.lane_width
    radius = (v * config.maneuver_duration) / (math.pi / 2.0)
    if config.scenario == "merge":
        # oncoming traffic in the target lane, driving -x toward the merge zone
        return Pose2(d, lane, math.pi), (-1.0, 0.0)
    if config.scenario == "right-turn":
        # cross traffic from the top of the intersection, driving -y down the
        # lane the ego turns into
        return Pose2(radius, d, -math.pi / 2.0), (0.0, -1.0)
    # left-turn: opposite-direction traffic in the adjacent lane, driving -x
    return Pose2(d, lane, math.pi), (-1.0, 0.0)


# ---------------------------------------------------------------------------
# scene construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    """One sampled trial setup: the ego plan and the obstacle schedule."""

    config: ScenarioConfig
    seed: int
    ego_speed: float
    path: LanePath
    trajectory: Trajectory
    obstacle0: ObstacleState
    obstacle_velocity: tuple[float, float]

    def obstacle_at(self, t: float) -> ObstacleState:
        p = self.obstacle0.pose
        return ObstacleState(
            id=self.obstacle0.id,
            pose=Pose2(p.x + self.obstacle_velocity[0] * t,
                       p.y + self.obstacle_velocity[1] * t, p.theta),
            velocity=self.obstacle_velocity,
            half_length=self.obstacle0.half_length,
            half_width=self.obstacle0.half_width,
        )


_TRAJ_CACHE: dict[tuple, Trajectory] = {}


def reference_trajectory(config: ScenarioConfig, path: LanePath, speed: float) -> Trajectory:
    """Obstacle-free rollout of the path at the sampled cruise speed.

    With no obstacle there are no queries and no braking, so the rollout is
    the path swept at constant speed; cached per (geometry, speed).
    """
    key = (config.scenario, config.approach_distance, config.maneuver_duration,
           config.post_duration, config.lane_width, round(speed, 9))
    hit = _TRAJ_CACHE.get(key)
    if hit is not None:
        return hit
    dt = config.dt
    n = int(math.floor(path.length / speed / dt)) + 1
    times = np.arange(n) * dt
    ss = np.minimum(times * speed, path.length)
    xs = np.interp(ss, path.s, path.xs)
    ys = np.interp(ss, path.s, path.ys)
    ths = np.interp(ss, path.s, path.headings)
    traj = Trajectory(times, xs, ys, np.array([wrap_angle(t) for t in ths]),
                      np.full(n, speed))
    if len(_TRAJ_CACHE) < 64:
        _TRAJ_CACHE[key] = traj
    return traj


def trial_rng(master_seed: int, trial_index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, stream))
    )


def build_scenario(config: ScenarioConfig, seed: int) -> Scene:
    """Deterministic scene from (config, seed): sampled ego cruise speed,
    obstacle speed and spawn jitter on the scenario geometry."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    v_nom = config.nominal_speed
    ego_speed = v_nom + rng.uniform(-config.ego_speed_jitter, config.ego_speed_jitter)
    obs_speed = rng.uniform(*config.speed_range)
    jitter = rng.uniform(-config.spawn_jitter, config.spawn_jitter)

    path = build_ego_path(config)
    traj = reference_trajectory(config, path, ego_speed)
    pose0, direction = obstacle_start(config, jitter)
    if config.no_obstacle:
        # park the obstacle far outside the scene; the rollout then matches
        # the reference trajectory definition (full run without the obstacle)
        pose0 = Pose2(pose0.x + 1e5, pose0.y + 1e5, pose0.theta)
        obs_speed = 0.0
    velocity = (direction[0] * obs_speed, direction[1] * obs_speed)
    obstacle = ObstacleState(
        id="obstacle-0", pose=pose0, velocity=velocity,
        half_length=config.obstacle_half_length, half_width=config.obstacle_half_width,
    )
    return Scene(config=config, seed=seed, ego_speed=ego_speed, path=path,
                 trajectory=traj, obstacle0=obstacle, obstacle_velocity=velocity)

# ---------------------------------------------------------------------------
# trial execution
# ---------------------------------------------------------------------------

@dataclass
class DecisionRecord:
    query_id: str
    issue_time: float
    question: str
    options: tuple[str, ...]
    option: str
    perceived: float
    perceived_stderr: float
    latency: float
    apply_at: float
    action_kind: str

    def as_dict(self) -> dict:
        d = asdict(self)
        d["options"] = list(self.options)
        return d


@dataclass
class TrialResult:
    """Per-trial outcome: collision flag, clearance, decision log, and the
    logged pose streams the collision flag can be re-derived from."""

    seed: int
    policy: str
    collided: bool
    collision_time: float | None
    min_clearance: float
    end_time: float
    end_reason: str
    decisions: list[DecisionRecord]
    times: np.ndarray
    ego_poses: np.ndarray
    ego_speeds: np.ndarray
    obstacle_poses: np.ndarray
    belief_means: np.ndarray | None = None
    belief_covs: np.ndarray | None = None
    wall_time: float = 0.0

    def as_row(self) -> dict:
        return {
            "seed": self.seed,
            "policy": self.policy,
            "collided": self.collided,
            "collision_time": self.collision_time,
            "min_clearance": round(float(self.min_clearance), 6),
            "end_time": round(float(self.end_time), 4),
            "end_reason": self.end_reason,
            "queries": len(self.decisions),
            "decisions": [d.as_dict() for d in self.decisions],
        }


class TrialRunner:
    """Stepwise closed-loop simulation of one trial.

    The loop is the single owner of world state: it polls due decisions,
    updates the tracker, fires at most one open query at a time, advances
    the vehicles and records the pose log.  Policy "none" never queries;
    policy "live" leaves open queries to an external session to answer.
    """

    def __init__(self, config: ScenarioConfig, seed: int, record_beliefs: bool = False):
        self.config = config
        self.scene = build_scenario(config, seed)
        self.seed = seed
        self.dt = config.dt
        self.k = 0
        self.s = 0.0
        self.speed = self.scene.ego_speed
        self.braking = False
        self.brake_decel = config.brake_decel
        self.queue = DecisionQueue(step=config.dt)
        self.open_query: VisualQuery | None = None
        self.pending_live_query: VisualQuery | None = None
        self.committed_brake = False
        self.collided = False
        self.collision_time: float | None = None
        self.min_clearance = math.inf
        self.end_reason: str | None = None
        self.decisions: list[DecisionRecord] = []
        self.record_beliefs = record_beliefs
        self._query_count = 0
        self._answer_rng = trial_rng(seed, 0, 1)
        self._latency_rng = trial_rng(seed, 0, 2)
        self._trigger_rng = trial_rng(seed, 0, 3)
        self._stagger_rng = trial_rng(seed, 0, 4)
        self._next_query_step = 0
        self._model = config.motion_model(self.scene.obstacle_velocity)
        self._trigger_every = max(1, int(round(config.trigger_period / config.dt)))
        self._trigger_hot_until = -math.inf
        self._log_t: list[float] = []
        self._log_ego: list[tuple[float, float, float]] = []
        self._log_speed: list[float] = []
        self._log_obs: list[tuple[float, float, float]] = []
        self._log_means: list[np.ndarray] = []
        self._log_covs: list[np.ndarray] = []
        obs0 = self.scene.obstacle_at(0.0)
        self._prev_obs = obs0
        # raw filter state; the MixtureBelief view is built lazily on demand
        self._kf_mu = obs0.pose.as_array()
        self._kf_p = np.diag([1.0, 1.0, 0.25])
        self._kf_r = DEFAULT_MEAS_NOISE
        self._kf_time = 0.0

    @property
    def time(self) -> float:
        return self.k * self.dt

    def _kf_step(self, obs: ObstacleState) -> None:
        # same predict/update arithmetic as prediction.ekf_track, kept raw to
        # avoid per-step belief construction
        mu = self._kf_mu + self._model.drift(self.dt)
        p = self._kf_p + self.dt * self._model.q
        innov = obs.pose.as_array() - mu
        innov[2] = wrap_angle(innov[2])
        s = p + self._kf_r
        k = p @ np.linalg.inv(s)
        self._kf_mu = mu + k @ innov
        ikh = np.eye(3) - k
        self._kf_p = ikh @ p @ ikh.T + k @ self._kf_r @ k.T
        self._kf_time = self.time

    @property
    def belief(self) -> MixtureBelief:
        return single_mode(Pose2(*self._kf_mu), self._kf_p, time=self._kf_time)

    def ego_state(self) -> EgoState:
        pose = self.scene.path.pose_at(self.s)
        return EgoState(pose=pose, speed=self.speed, time=self.time)

    def ego_footprint(self) -> Footprint:
        return Footprint(self.scene.path.pose_at(self.s),
                         self.config.ego_half_length, self.config.ego_half_width)

    def obstacle_footprint(self, obs: ObstacleState) -> Footprint:
        return Footprint(obs.pose, obs.half_length, obs.half_width)

    def scene_view(self) -> SceneView:
        return SceneView(
            time=self.time,
            ego=self.ego_state(),
            belief=self.belief,
            model=self._model,
            ego_half_length=self.config.ego_half_length,
            ego_half_width=self.config.ego_half_width,
            obstacle_half_length=self.config.obstacle_half_length,
            obstacle_half_width=self.config.obstacle_half_width,
        )

    def done(self) -> bool:
        return self.end_reason is not None

    # -- decision plumbing --------------------------------------------------

    def submit_decision(self, action: DecisionAction, issued_at: float, latency: float,
                        query_id: str) -> float:
        """Queue a parsed, validated decision; returns its application time."""
        pending = self.queue.enqueue(action, issued_at, latency, query_id=query_id)
        return pending.apply_at

    def _apply_due(self, t: float) -> list:
        due = self.queue.poll_due(t)
        for d in due:
            if d.action.kind == BRAKE and not self.committed_brake:
                self.braking = True
                self.committed_brake = True
            if self.open_query is not None and d.query_id == self.open_query.id:
                self.open_query = None
                # short randomized re-engagement pause before the next query,
                # so the query grid does not phase-lock across trials
                self._next_query_step = self.k + int(self._stagger_rng.integers(0, 10))
        return due

    def _maybe_query(self) -> None:
        if self.config.policy == "none":
            return
        if self.committed_brake or self.open_query is not None:
            return
        if self.k < self._next_query_step:
            return
        t = self.time
        # a recently hot trigger re-arms the query channel immediately after
        # the pending decision applies; otherwise probe on the planner cadence
        if t >= self._trigger_hot_until:
            if self.k % self._trigger_every != 0:
                return
            view = self.scene_view()
            if not should_trigger(view, self.scene.trajectory, self.config.trigger(),
                                  self._trigger_rng):
                return
        else:
            view = self.scene_view()
        self._trigger_hot_until = t + self.config.trigger_hot_window
        self._query_count += 1
        template = self.config.template()
        query = generate_query(view, template, f"q{self._query_count}")
        self.open_query = query
        if self.config.policy == "live":
            self.pending_live_query = query
            return
        tau = draw_latency(self.config.latency_model(), self._latency_rng)
        answer, est = simulated_operator(
            query, self.config.policy, view, self.scene.trajectory, tau,
            self.config.operator_safety(), self.config.operator(), self._answer_rng,
        )
        action = parse_answer(answer, query, template)
        check = validate_feasibility(action, view.ego, self.scene.trajectory)
        if not check.accepted:
            action = DecisionAction(kind=BRAKE, deceleration=self.config.brake_decel)
        apply_at = self.submit_decision(action, self.time, tau, query.id)
        self.decisions.append(DecisionRecord(
            query_id=query.id, issue_time=self.time, question=query.question,
            options=query.options, option=answer.option, perceived=est.value,
            perceived_stderr=est.stderr, latency=tau, apply_at=apply_at,
            action_kind=action.kind,
        ))

    # -- stepping -----------------------------------------------------------

    def step(self) -> None:
        """One simulation step: apply due decisions, sense, maybe query,
        log, then integrate the vehicles."""
        if self.done():
            return
        t = self.time
        self._apply_due(t)

        obs = self.scene.obstacle_at(t)
        if self.k > 0:
            self._kf_step(obs)
        self._prev_obs = obs

        self._maybe_query()

        ego_fp = self.ego_footprint()
        obs_fp = self.obstacle_footprint(obs)
        # cheap lower bound first: the exact clearance only matters when it
        # could lower the running minimum
        pose = ego_fp.center
        bound = math.hypot(obs.pose.x - pose.x, obs.pose.y - pose.y) - (
            math.hypot(ego_fp.half_length, ego_fp.half_width)
            + math.hypot(obs.half_length, obs.half_width)
        )
        if bound < self.min_clearance:
            clearance = rect_clearance(ego_fp, obs_fp)
            self.min_clearance = min(self.min_clearance, clearance)
        else:
            clearance = bound

        self._log_t.append(t)
        pose = ego_fp.center
        self._log_ego.append((pose.x, pose.y, pose.theta))
        self._log_speed.append(self.speed)
        self._log_obs.append((obs.pose.x, obs.pose.y, obs.pose.theta))
        if self.record_beliefs:
            self._log_means.append(self._kf_mu.copy())
            self._log_covs.append(self._kf_p.copy())

        if clearance == 0.0:
            self.collided = True
            self.collision_time = t
            self.end_reason = "collision"
            return

        # integrate ego along its path
        if self.braking:
            v0 = self.speed
            v1 = max(0.0, v0 - self.brake_decel * self.dt)
            self.s += 0.5 * (v0 + v1) * self.dt
            self.speed = v1
        else:
            self.s = min(self.s + self.speed * self.dt, self.scene.path.length)
        self.k += 1

        t = self.time
        if t > self.scene.trajectory.end + 1e-9 and not self.braking:
            self.end_reason = "completed"
        elif t > self.config.time_cap + 1e-9:
            self.end_reason = "time-cap"
        elif self.braking and self.speed == 0.0 and len(self.queue) == 0:
            # stopped ego: keep simulating only while the obstacle can still
            # reach it, so collisions with a stopped vehicle are counted
            if self._obstacle_receding(t):
                self.end_reason = "stopped"

    def _obstacle_receding(self, t: float) -> bool:
        obs = self.scene.obstacle_at(t)
        pose = self.scene.path.pose_at(self.s)
        rel = np.array([pose.x - obs.pose.x, pose.y - obs.pose.y])
        vel = np.array(self.scene.obstacle_velocity)
        closing = float(rel @ vel)
        return closing <= 0.0 or float(np.hypot(*rel)) > 60.0

    def collect_result(self, wall_time: float = 0.0) -> TrialResult:
        return TrialResult(
            seed=self.seed,
            policy=self.config.policy,
            collided=self.collided,
            collision_time=self.collision_time,
            min_clearance=float(self.min_clearance),
            end_time=self.time,
            end_reason=self.end_reason,
            decisions=self.decisions,
            times=np.array(self._log_t),
            ego_poses=np.array(self._log_ego),
            ego_speeds=np.array(self._log_speed),
            obstacle_poses=np.array(self._log_obs),
            belief_means=np.array(self._log_means) if self.record_beliefs else None,
            belief_covs=np.array(self._log_covs) if self.record_beliefs else None,
            wall_time=wall_time,
        )

    def run(self) -> TrialResult:
        start = _time.perf_counter()
        while not self.done():
            self.step()
        return self.collect_result(wall_time=_time.perf_counter() - start)


def run_trial(config: ScenarioConfig, seed: int, record_beliefs: bool = False) -> TrialResult:
    """Simulate one trial to completion."""
    return TrialRunner(config, seed, record_beliefs=record_beliefs or config.record_trace).run()

# ---------------------------------------------------------------------------
# batches and reports
# ---------------------------------------------------------------------------

def trial_seed(master_seed: int, index: int) -> int:
    """Policy-independent per-trial seed so paired batches share scenes."""
    return int(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)).generate_state(1)[0]
    )


@dataclass
class BatchReport:
    """Aggregate of one (scenario, policy, latency) batch."""

    config_digest: str
    scenario: str
    policy: str
    latency: float | tuple[float, float]
    master_seed: int
    trials: int
    collisions: int
    results: list[dict]
    reduction_ratio: float | None = None
    reduction_label: str | None = None
    wall_time: float = 0.0

    @property
    def collision_rate(self) -> float:
        return self.collisions / self.trials

    @property
    def rate_fraction(self) -> str:
        return f"{self.collisions}/{self.trials}"

    def canonical_dict(self) -> dict:
        """Deterministic report content; excludes wall-clock timing."""
        return {
            "config_digest": self.config_digest,
            "scenario": self.scenario,
            "policy": self.policy,
            "latency": self.latency,
            "master_seed": self.master_seed,
            "trials": self.trials,
            "collisions": self.collisions,
            "collision_rate": self.collision_rate,
            "rate_fraction": self.rate_fraction,
            "reduction_ratio": self.reduction_ratio,
            "reduction_label": self.reduction_label,
            "results": self.results,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True)


def _trial_job(args) -> tuple[int, TrialResult]:
    config, index = args
    seed = trial_seed(config.master_seed, index)
    return index, run_trial(config, seed)


def run_batch(config: ScenarioConfig, progress=None) -> BatchReport:
    """Run config.trials independent trials; deterministic given
    (config, master_seed) regardless of worker scheduling."""
    start = _time.perf_counter()
    jobs = [(config, i) for i in range(config.trials)]
    results: list[TrialResult | None] = [None] * config.trials
    import os

    workers = min(config.workers, os.cpu_count() or 1)
    if workers > 1 and config.trials > 1:
        import concurrent.futures as cf
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with cf.ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            for index, result in pool.map(_trial_job, jobs, chunksize=4):
                results[index] = result
                if progress:
                    progress(index)
    else:
        for job in jobs:
            index, result = _trial_job(job)
            results[index] = result
            if progress:
                progress(index)
    collisions = sum(1 for r in results if r.collided)
    return BatchReport(
        config_digest=config.digest(),
        scenario=config.scenario,
        policy=config.policy,
        latency=config.latency_human if config.latency_network == 0.0
        else (config.latency_human, config.latency_network),
        master_seed=config.master_seed,
        trials=config.trials,
        collisions=collisions,
        results=[r.as_row() for r in results],
        wall_time=_time.perf_counter() - start,
    )


def run_paired_batches(config: ScenarioConfig, progress=None) -> tuple[BatchReport, BatchReport]:
    """Baseline and latency-aware batches on identical trial scenes; the
    latency-aware report carries the reduction ratio."""
    base = run_batch(replace(config, policy=BASELINE), progress=progress)
    aware = run_batch(replace(config, policy=LAVQA), progress=progress)
    if aware.collisions > 0:
        ratio = base.collisions / aware.collisions
        aware.reduction_ratio = ratio
        aware.reduction_label = f"{ratio:.2f}x"
    elif base.collisions == 0:
        aware.reduction_ratio = 1.0
        aware.reduction_label = "1x"
    else:
        floor = base.collision_rate * config.trials
        aware.reduction_ratio = None
        aware.reduction_label = f">={floor:.0f}x"
    base.reduction_ratio = 1.0
    base.reduction_label = "1x"
    return base, aware


# ---------------------------------------------------------------------------
# perceived-risk traces
# ---------------------------------------------------------------------------

@dataclass
class TraceTable:
    """Fig-style perceived-risk table: ground truth plus one column per
    configured latency."""

    times: np.ndarray
    ground_truth: np.ndarray
    latencies: tuple[float, ...]
    perceived: dict[float, np.ndarray]
    lam: float

    def first_crossing(self, column: np.ndarray) -> float | None:
        idx = np.nonzero(column >= self.lam)[0]
        if len(idx) == 0:
            return None
        return float(self.times[idx[0]])

    def to_csv(self) -> str:
        header = ["t", "ground_truth"] + [f"perceived_{int(round(l * 1000))}ms"
                                          for l in self.latencies]
        lines = [",".join(header)]
        for i, t in enumerate(self.times):
            row = [f"{t:.2f}", f"{self.ground_truth[i]:.6f}"]
            for lat in self.latencies:
                row.append(f"{self.perceived[lat][i]:.6f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def window_risk_curve(result: TrialResult, config: ScenarioConfig,
                      samples: int = 4000) -> np.ndarray:
    """Forward-window risk of the committed plan at every logged step,
    evaluated from that step's tracked belief (the tau = 0 perception)."""
    if result.belief_means is None:
        raise ValueError("trace requires a trial recorded with beliefs")
    scene = build_scenario(config, result.seed)
    traj = scene.trajectory
    model = config.motion_model(scene.obstacle_velocity)
    offsets = np.arange(0.0, config.window + 1e-9, config.probe_dt)
    n = len(result.times)
    curve = np.zeros(n)
    for i in range(n):
        t = float(result.times[i])
        belief = single_mode(
            Pose2(*result.belief_means[i]), result.belief_covs[i], time=t
        )
        view = SceneView(
            time=t,
            ego=EgoState(Pose2(*result.ego_poses[i]), float(result.ego_speeds[i]), t),
            belief=belief,
            model=model,
            ego_half_length=config.ego_half_length,
            ego_half_width=config.ego_half_width,
            obstacle_half_length=config.obstacle_half_length,
            obstacle_half_width=config.obstacle_half_width,
        )
        offs = offsets[t + offsets <= traj.end + 1e-9]
        if len(offs) == 0:
            offs = np.array([0.0])
            curve[i] = curve[i - 1] if i else 0.0
            continue
        rng = trial_rng(result.seed, 1, i)
        risks = _probe_risks(view, traj, offs, samples, rng)
        curve[i] = float(risks.max())
    return curve


def perceived_risk_trace(result: TrialResult, config: ScenarioConfig,
                         latencies: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4),
                         samples: int = 4000) -> TraceTable:
    """Ground-truth risk plus per-latency perceived curves.

    Ground truth is the forward-window risk computed post hoc at tau = 0.
    The perceived value at latency tau and output time t is the same
    computation on the snapshot from t - tau: risk as seen through tau of
    information delay, indexed by when the decision lands.
    """
    gt = window_risk_curve(result, config, samples=samples)
    perceived: dict[float, np.ndarray] = {}
    dt = config.dt
    for lat in latencies:
        shift = int(round(lat / dt))
        col = np.empty_like(gt)
        col[:shift] = gt[0]
        col[shift:] = gt[: len(gt) - shift]
        perceived[lat] = col
    return TraceTable(times=result.times.copy(), ground_truth=gt,
                      latencies=tuple(latencies), perceived=perceived, lam=config.lam)
