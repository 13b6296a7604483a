"""Latency-induced collision map: a bird's-eye-view grid whose cells carry
the maximum delayed collision probability over ego poses inside the cell,
with density-mass pruning, threshold classification, heatmap rendering and
a compact binary wire format.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import EgoState, Trajectory, pose_on_trajectory
from .licp import SafetyConfig
from .prediction import MixtureBelief, MotionModel, position_density, propagate, sample_poses

WIRE_MAGIC = b"LICM"
WIRE_VERSION = 1
_HEADER = struct.Struct("<4sBHHffff")

# probe offsets within one cell, in units of the cell resolution:
# the center plus the four corner offsets
_PROBE_OFFSETS = np.array(
    [[0.0, 0.0], [0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]
)


@dataclass(frozen=True)
class GridSpec:
    """Grid geometry: corner origin of cell (0, 0), cell resolution and size."""

    origin: tuple[float, float]
    resolution: float
    width: int
    height: int

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be > 0")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must have at least one cell per axis")
        if self.width > 0xFFFF or self.height > 0xFFFF:
            raise ValueError("grid dimensions exceed the wire format (u16)")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) center coordinate vectors along each axis."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        return xs, ys

    @classmethod
    def centered_on(cls, x: float, y: float, extent: float = 80.0, resolution: float = 0.5):
        n = int(round(extent / resolution))
        return cls(
            origin=(x - extent / 2.0, y - extent / 2.0),
            resolution=resolution,
            width=n,
            height=n,
        )


@dataclass(frozen=True)
class RiskGrid:
    """The computed map: values[row, col] is the cell at (col, row), values
    are probabilities, tau is the latency the map was evaluated for."""

    spec: GridSpec
    values: np.ndarray
    tau: float
    timestamp: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.spec.height, self.spec.width):
            raise ValueError("values must have shape (height, width)")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("grid values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    def quantized(self) -> "RiskGrid":
        """Values rounded onto the 16-bit wire lattice."""
        q = np.round(self.values * 65535.0) / 65535.0
        return RiskGrid(self.spec, q, self.tau, self.timestamp)


@dataclass(frozen=True)
class EgoTemplate:
    """The ego placed on the map: its kinematic state, footprint extents and
    (optionally) the reference trajectory supplying the heading at t_d."""

    state: EgoState
    half_length: float = 2.25
    half_width: float = 1.0
    trajectory: Trajectory | None = None

    def heading_at(self, t: float) -> float:
        if self.trajectory is not None:
            lo, hi = self.trajectory.start, self.trajectory.end
            pose, _ = pose_on_trajectory(self.trajectory, min(max(t, lo), hi))
            return pose.theta
        return self.state.pose.theta


def _box_mass(density_grid: np.ndarray, radius: int) -> np.ndarray:
    """Sum of a per-cell mass grid over the (2r+1)^2 neighborhood of each
    cell, via an integral image."""
    h, w = density_grid.shape
    ii = np.zeros((h + 1, w + 1))
    ii[1:, 1:] = np.cumsum(np.cumsum(density_grid, axis=0), axis=1)
    r = radius
    y0 = np.clip(np.arange(h) - r, 0, h)
    y1 = np.clip(np.arange(h) + r + 1, 0, h)
    x0 = np.clip(np.arange(w) - r, 0, w)
    x1 = np.clip(np.arange(w) + r + 1, 0, w)
    return ii[y1][:, x1] - ii[y0][:, x1] - ii[y1][:, x0] + ii[y0][:, x0]


def compute_licom(
    spec: GridSpec,
    template: EgoTemplate,
    belief: MixtureBelief | None,
    model: MotionModel | None,
    tau: float,
    config: SafetyConfig,
    rng: np.random.Generator,
    obstacle_half_length: float = 2.25,
    obstacle_half_width: float = 1.0,
    samples: int = 20000,
    prune: bool = True,
) -> RiskGrid:
    """Fill the grid with the per-cell maximum delayed collision probability.

    Each candidate cell is probed at its center and four corners, all at the
    ego's trajectory heading at t_d; the cell takes the maximum estimate
    over the probes.  Cells whose surrounding obstacle probability mass at
    t_d falls below a lam-derived floor are zeroed without evaluation.
    """
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    t_d = template.state.time + tau
    if belief is None:
        return RiskGrid(spec, np.zeros((spec.height, spec.width)), tau, template.state.time)
    if model is None:
        raise ValueError("a motion model is required when a belief is given")

    heading = template.heading_at(t_d)
    moved = propagate(belief, tau, model)
    draws = sample_poses(moved, samples, rng)

    xs, ys = spec.cell_centers()
    res = spec.resolution

    if prune:
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        # cell-sized smoothing keeps near-degenerate beliefs visible on the grid
        dens = position_density(moved, pts, smooth_var=res * res / 12.0)
        mass = (dens * res * res).reshape(spec.height, spec.width)
        # the neighborhood must cover the footprint interaction reach,
        # otherwise cells a rectangle-length away from the mass get dropped
        reach = math.hypot(template.half_length, template.half_width) + math.hypot(
            obstacle_half_length, obstacle_half_width
        )
        radius = max(3, int(math.ceil(reach / res)) + 1)
        keep = _box_mass(mass, radius) >= config.lam * 1e-3
    else:
        keep = np.ones((spec.height, spec.width), dtype=bool)

    values = np.zeros((spec.height, spec.width))
    rows, cols = np.nonzero(keep)
    if len(rows) > 0:
        centers = np.column_stack([xs[cols], ys[rows]])
        probes = centers[:, None, :] + _PROBE_OFFSETS[None, :, :] * res
        flat = probes.reshape(-1, 2)
        poses = np.column_stack([flat, np.full(len(flat), heading)])
        counts = kernels.overlap_counts(
            poses,
            (template.half_length, template.half_width),
            draws,
            (obstacle_half_length, obstacle_half_width),
        )
        frac = counts.reshape(len(rows), len(_PROBE_OFFSETS)) / samples
        values[rows, cols] = frac.max(axis=1)

    return RiskGrid(spec, values, tau, template.state.time)


def classify(grid: RiskGrid, lam: float) -> np.ndarray:
    """Boolean unsafe mask: a cell is unsafe when its value reaches lam."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must lie in [0, 1]")
    return grid.values >= lam


def render_heatmap(grid: RiskGrid, lam: float, scale: int = 4) -> bytes:
    """PNG of the grid: unsafe cells on a red ramp, safe cells on a green
    ramp, lam as the color break.  Pixel (0, 0) maps to cell (0, height-1)."""
    from PIL import Image

    unsafe = classify(grid, lam)
    v = grid.values
    rgb = np.zeros((grid.spec.height, grid.spec.width, 3), dtype=np.uint8)
    if lam > 0.0:
        safe_ramp = np.clip(v / lam, 0.0, 1.0)
    else:
        safe_ramp = np.zeros_like(v)
    if lam < 1.0:
        unsafe_ramp = np.clip((v - lam) / (1.0 - lam), 0.0, 1.0)
    else:
        unsafe_ramp = np.ones_like(v)
    rgb[..., 1] = np.where(unsafe, 0, (200 - 120 * safe_ramp)).astype(np.uint8)
    rgb[..., 0] = np.where(unsafe, (140 + 115 * unsafe_ramp), 0).astype(np.uint8)
    rgb = np.flipud(rgb)
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    img = Image.fromarray(rgb, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def serialize_grid(grid: RiskGrid) -> bytes:
    """Wire payload: fixed header plus little-endian u16 values scaled by
    65535, row-major.  Round-trips bit-exactly for wire-quantized values."""
    header = _HEADER.pack(
        WIRE_MAGIC,
        WIRE_VERSION,
        grid.spec.width,
        grid.spec.height,
        grid.spec.resolution,
        grid.spec.origin[0],
        grid.spec.origin[1],
        grid.tau,
    )
    q = np.round(grid.values * 65535.0).astype("<u2")
    return header + q.tobytes(order="C")


def deserialize_grid(payload: bytes) -> RiskGrid:
    """Decode a wire payload; malformed input raises ValueError."""
    if len(payload) < _HEADER.size:
        raise ValueError("payload shorter than header")
    magic, version, width, height, resolution, ox, oy, tau = _HEADER.unpack_from(payload)
    if magic != WIRE_MAGIC:
        raise ValueError("bad magic")
    if version != WIRE_VERSION:
        raise ValueError(f"unsupported version {version}")
    m = width * height
    expected = _HEADER.size + 2 * m
    if len(payload) != expected:
        raise ValueError(f"payload length {len(payload)} != expected {expected}")
    raw = np.frombuffer(payload, dtype="<u2", offset=_HEADER.size, count=m)
    values = (raw.astype(np.float64) / 65535.0).reshape(height, width)
    spec = GridSpec(origin=(float(ox), float(oy)), resolution=float(resolution),
                    width=int(width), height=int(height))
    return RiskGrid(spec, values, float(tau))
