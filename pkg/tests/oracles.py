"""Independent oracles the unit and acceptance tests check the fast paths
against.  Nothing here shares code with the estimators under test beyond
plain numpy."""

from __future__ import annotations

import math

import numpy as np


def points_in_rect(points: np.ndarray, cx, cy, theta, hl, hw) -> np.ndarray:
    """Boolean mask of points inside an oriented rectangle (inclusive)."""
    c, s = math.cos(theta), math.sin(theta)
    dx = points[:, 0] - cx
    dy = points[:, 1] - cy
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= hl) & (np.abs(v) <= hw)


def _rect_aabb(cx, cy, theta, hl, hw):
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    ex = hl * c + hw * s
    ey = hl * s + hw * c
    return cx - ex, cx + ex, cy - ey, cy + ey


def rasterized_overlap(rect_a, rect_b, resolution: float = 0.01) -> bool:
    """Point-sampling overlap oracle: rasterize the shared bounding region
    and look for a point occupied by both rectangles."""
    ax0, ax1, ay0, ay1 = _rect_aabb(*rect_a)
    bx0, bx1, by0, by1 = _rect_aabb(*rect_b)
    x0, x1 = max(ax0, bx0), min(ax1, bx1)
    y0, y1 = max(ay0, by0), min(ay1, by1)
    if x0 > x1 or y0 > y1:
        return False
    xs = np.arange(x0, x1 + resolution, resolution)
    ys = np.arange(y0, y1 + resolution, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    both = points_in_rect(pts, *rect_a) & points_in_rect(pts, *rect_b)
    return bool(both.any())


def mixture_density_histogram(belief, probe, rng, n=1_000_000, half_width=0.25):
    """Numerical density at a probe point from a normalized sample histogram:
    fraction of draws inside a small box around the probe over its volume."""
    from latrisk.prediction import sample_poses

    draws = sample_poses(belief, n, rng)
    inside = np.all(np.abs(draws - probe[None, :]) <= half_width, axis=1)
    volume = (2.0 * half_width) ** 3
    return inside.mean() / volume
