"""Instantaneous collision probability between the ego footprint and an
uncertain obstacle: a Monte-Carlo estimator, a dense-quadrature oracle over
a 6-sigma box, and the closest-obstacle selection rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import EgoState, Footprint, ObstacleState
from .prediction import MixtureBelief, sample_poses

_DEG_VAR = 1e-12


@dataclass(frozen=True)
class RiskEstimate:
    """A collision probability with its estimation metadata."""

    value: float
    stderr: float
    samples: int
    method: str

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError("probability must lie in [0, 1]")
        if self.stderr < 0.0:
            raise ValueError("stderr must be >= 0")
        if self.method == "monte-carlo" and self.samples < 1:
            raise ValueError("monte-carlo estimate needs samples >= 1")


def collision_prob_mc(
    ego: Footprint,
    belief: MixtureBelief,
    obstacle_half_length: float,
    obstacle_half_width: float,
    n: int,
    rng: np.random.Generator,
) -> RiskEstimate:
    """Monte-Carlo collision probability: fraction of belief draws whose
    footprint intersects the ego rectangle."""
    if n < 100:
        raise ValueError("n must be >= 100 for a meaningful estimate")
    samples = sample_poses(belief, n, rng)
    hits = int(
        kernels.overlap_counts(
            ego.center.as_array().reshape(1, 3),
            (ego.half_length, ego.half_width),
            samples,
            (obstacle_half_length, obstacle_half_width),
        )[0]
    )
    p = hits / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    return RiskEstimate(value=p, stderr=stderr, samples=n, method="monte-carlo")


def _mode_quadrature(
    ego: Footprint,
    mean: np.ndarray,
    cov: np.ndarray,
    obs_half: tuple[float, float],
    resolution: float,
    heading_values: int,
) -> float:
    """Riemann sum of indicator x density over a truncated (x, y, theta) grid.

    Axes with (near) zero variance collapse to the mean and the density is
    evaluated on the marginal over the remaining axes.
    """
    var = np.diag(cov)
    active = var > _DEG_VAR
    if not active.any():
        hit = kernels.overlap_single(
            ego.center.as_array(), (ego.half_length, ego.half_width), mean, obs_half
        )
        return (1.0 if hit else 0.0), 1

    axes_vals = []
    axes_steps = []
    for k in range(3):
        if not active[k]:
            axes_vals.append(np.array([mean[k]]))
            axes_steps.append(1.0)
            continue
        sd = math.sqrt(var[k])
        if k < 2:
            half = 6.0 * sd
            count = max(3, int(math.ceil(2.0 * half / resolution)))
        else:
            half = 3.0 * sd
            count = max(heading_values, 9)
        vals = np.linspace(mean[k] - half, mean[k] + half, count)
        axes_vals.append(vals)
        axes_steps.append(float(vals[1] - vals[0]))

    gx, gy, gt = np.meshgrid(axes_vals[0], axes_vals[1], axes_vals[2], indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gt.ravel()])

    sub = pts[:, active] - mean[active]
    sub_cov = cov[np.ix_(active, active)]
    chol = np.linalg.cholesky(sub_cov)
    z = np.linalg.solve(chol, sub.T)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = int(active.sum())
    dens = np.exp(-0.5 * np.sum(z * z, axis=0) - 0.5 * logdet - 0.5 * d * math.log(2 * math.pi))

    hits = kernels.overlap_mask(
        ego.center.as_array(), (ego.half_length, ego.half_width), pts, obs_half
    )
    vol = 1.0
    for k in range(3):
        if active[k]:
            vol *= axes_steps[k]
    return float(np.sum(dens[hits]) * vol), len(pts)


def collision_prob_quadrature(
    ego: Footprint,
    belief: MixtureBelief,
    obstacle_half_length: float,
    obstacle_half_width: float,
    resolution: float = 0.1,
    heading_values: int = 9,
) -> RiskEstimate:
    """Brute-force quadrature oracle over a per-mode truncated grid.

    Position axes span +-6 sigma at the requested resolution; heading is
    marginalized over a fixed grid of >= 9 values spanning +-3 sigma.
    """
    if resolution > 0.25:
        raise ValueError("resolution must be <= 0.25 m")
    if heading_values < 9:
        raise ValueError("heading grid needs >= 9 values")
    obs_half = (obstacle_half_length, obstacle_half_width)
    total = 0.0
    cells = 0
    for m in belief.modes:
        part, npts = _mode_quadrature(
            ego, m.mean.as_array(), m.cov, obs_half, resolution, heading_values
        )
        total += m.weight * part
        cells += npts
    value = float(min(max(total, 0.0), 1.0))
    return RiskEstimate(value=value, stderr=0.0, samples=cells, method="quadrature")


def closest_obstacle(ego: EgoState, obstacles: list[ObstacleState]) -> str | None:
    """Id of the obstacle nearest the ego by center distance; ties take the
    lowest id, empty input gives None."""
    if not obstacles:
        return None
    best = min(
        obstacles,
        key=lambda o: (
            math.hypot(o.pose.x - ego.pose.x, o.pose.y - ego.pose.y),
            str(o.id),
        ),
    )
    return best.id
