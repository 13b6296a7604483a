"""Probabilistic obstacle motion: Gaussian-mixture beliefs over SE(2),
a constant-velocity transition model and the Kalman tracker the harness
uses as its single-mode predictor.

Beliefs are immutable snapshots; every operation returns a new belief.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ObstacleState, Pose2, wrap_angle

_JITTER = 1e-9
_WEIGHT_TOL = 1e-9


def _check_cov(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (3, 3):
        raise ValueError("covariance must be 3x3")
    if not np.allclose(cov, cov.T, atol=1e-9):
        raise ValueError("covariance must be symmetric")
    w = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if w.min() < -1e-8:
        raise ValueError("covariance must be positive semi-definite")
    return 0.5 * (cov + cov.T)


def _sqrt_factor(cov: np.ndarray) -> np.ndarray:
    """PSD square root A with A @ A.T == cov; exact zero for a zero covariance."""
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


@dataclass(frozen=True)
class GaussianMode:
    """One mixture component: mean pose, 3x3 covariance over (x, y, theta), weight."""

    mean: Pose2
    cov: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "cov", _check_cov(self.cov))
        if not (0.0 <= self.weight <= 1.0):
            raise ValueError("weight must lie in [0, 1]")


@dataclass(frozen=True)
class MixtureBelief:
    """Weighted Gaussian mixture over an obstacle pose at a reference time."""

    modes: tuple[GaussianMode, ...]
    time: float = 0.0

    def __post_init__(self):
        modes = tuple(self.modes)
        if len(modes) < 1:
            raise ValueError("belief needs at least one mode")
        total = sum(m.weight for m in modes)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"mode weights must sum to 1 (got {total})")
        object.__setattr__(self, "modes", modes)

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.modes])

    @property
    def means(self) -> np.ndarray:
        return np.stack([m.mean.as_array() for m in self.modes])

    @property
    def covs(self) -> np.ndarray:
        return np.stack([m.cov for m in self.modes])


def single_mode(mean: Pose2, cov, time: float = 0.0) -> MixtureBelief:
    return MixtureBelief((GaussianMode(mean, cov, 1.0),), time=time)


@dataclass(frozen=True)
class MotionModel:
    """Constant-velocity obstacle model: per-second process noise and a
    planar velocity estimate."""

    q: np.ndarray
    velocity: tuple[float, float]
    kind: str = "constant-velocity"

    def __post_init__(self):
        object.__setattr__(self, "q", _check_cov(self.q))

    def drift(self, dt: float) -> np.ndarray:
        return np.array([self.velocity[0] * dt, self.velocity[1] * dt, 0.0])


def propagate(belief: MixtureBelief, dt: float, model: MotionModel) -> MixtureBelief:
    """Push the belief forward by dt under the constant-velocity transition.

    Means drift with the model velocity, covariances become F S F^T + dt Q
    (F is the identity for this linear model) and weights are untouched.
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    if dt == 0.0:
        return belief
    d = model.drift(dt)
    modes = tuple(
        GaussianMode(
            Pose2(m.mean.x + d[0], m.mean.y + d[1], m.mean.theta),
            m.cov + dt * model.q,
            m.weight,
        )
        for m in belief.modes
    )
    return MixtureBelief(modes, time=belief.time + dt)


def sample_pose(belief: MixtureBelief, rng: np.random.Generator) -> Pose2:
    """One draw from the mixture; mode picked by weight, then a normal draw."""
    p = sample_poses(belief, 1, rng)[0]
    return Pose2(float(p[0]), float(p[1]), float(p[2]))


def sample_poses(belief: MixtureBelief, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, 3) array of mixture draws; deterministic given the generator state.

    Degenerate (zero) covariances collapse exactly to the mode mean."""
    cum = np.cumsum(belief.weights)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, rng.random(n), side="right")
    eps = rng.standard_normal((n, 3))
    factors = np.stack([_sqrt_factor(m.cov) for m in belief.modes])
    out = belief.means[idx] + np.einsum("nij,nj->ni", factors[idx], eps)
    return out


def density(belief: MixtureBelief, pose: Pose2) -> float:
    """Mixture probability density at a pose.

    Raises ValueError when a mode covariance stays singular after the
    permitted 1e-9 jitter.
    """
    x = pose.as_array()
    total = 0.0
    for m in belief.modes:
        total += m.weight * _mode_density(m, x)
    return float(total)


def _mode_density(mode: GaussianMode, x: np.ndarray) -> float:
    cov = mode.cov
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # jitter only rescues numerical asymmetry; a genuinely rank-deficient
        # covariance has no density
        if np.linalg.eigvalsh(cov).min() < _JITTER:
            raise ValueError("singular mode covariance")
        chol = np.linalg.cholesky(cov + _JITTER * np.eye(3))
    diff = x - mode.mean.as_array()
    diff[2] = wrap_angle(diff[2])
    z = np.linalg.solve(chol, diff)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return math.exp(-0.5 * float(z @ z) - 0.5 * logdet - 1.5 * math.log(2.0 * math.pi))


def position_density(belief: MixtureBelief, points: np.ndarray, smooth_var: float = 0.0) -> np.ndarray:
    """Marginal (x, y) mixture density at an (n, 2) batch of points.

    smooth_var adds an isotropic variance floor so near-degenerate modes
    still spread measurable mass over grid cells (used by map pruning)."""
    points = np.asarray(points, dtype=np.float64)
    out = np.zeros(len(points))
    for m in belief.modes:
        cov = m.cov[:2, :2] + (smooth_var + _JITTER) * np.eye(2)
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
        d = points - np.array([m.mean.x, m.mean.y])
        q = inv[0, 0] * d[:, 0] ** 2 + 2 * inv[0, 1] * d[:, 0] * d[:, 1] + inv[1, 1] * d[:, 1] ** 2
        out += m.weight * np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(det))
    return out


DEFAULT_PRIOR_COV = np.diag([1.0, 1.0, 0.25])
DEFAULT_MEAS_NOISE = np.diag([0.05**2, 0.05**2, 0.02**2])


def ekf_track(
    prev: ObstacleState,
    observation: ObstacleState,
    dt: float,
    model: MotionModel,
    prior: MixtureBelief | None = None,
    meas_noise: np.ndarray | None = None,
) -> MixtureBelief:
    """One constant-velocity Kalman predict/update step on pose observations.

    prev anchors the default prior when no belief is threaded in; the harness
    threads each returned belief back as the next prior.  Returns a
    single-mode belief at the observation time.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    r = DEFAULT_MEAS_NOISE if meas_noise is None else np.asarray(meas_noise, dtype=np.float64)
    if prior is None:
        mu = prev.pose.as_array()
        p = DEFAULT_PRIOR_COV.copy()
    else:
        mu = prior.modes[0].mean.as_array()
        p = prior.modes[0].cov.copy()
    # predict (F = identity; velocity enters as a known drift)
    mu = mu + model.drift(dt)
    p = p + dt * model.q
    # update
    z = observation.pose.as_array()
    innov = z - mu
    innov[2] = wrap_angle(innov[2])
    s = p + r
    k = p @ np.linalg.inv(s)
    mu = mu + k @ innov
    ikh = np.eye(3) - k
    p = ikh @ p @ ikh.T + k @ r @ k.T
    mean = Pose2(float(mu[0]), float(mu[1]), float(mu[2]))
    return single_mode(mean, p, time=(prior.time + dt) if prior is not None else dt)
