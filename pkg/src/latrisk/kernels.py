"""Hot numeric kernels: oriented-rectangle overlap tests and batched
indicator sums used by every Monte-Carlo risk estimate.

Two implementations coexist: numba-compiled loops (the default whenever
numba imports) and vectorized pure-numpy fallbacks.  Set
``LATRISK_PURE_NUMPY=1`` to force the numpy path; ``benchmarks/bench_kernels.py``
compares the two.

All kernels use the separating-axis test on the 4 edge normals of the two
rectangles, which is exact for oriented rectangles.  Touching rectangles
count as overlapping (separation requires a strictly positive gap).
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("LATRISK_PURE_NUMPY", "").strip().lower() in (
    "1",
    "true",
    "yes",
)


def _have_numba() -> bool:
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()
USING_NUMBA = HAVE_NUMBA and not _FORCE_NUMPY


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _axis_gaps(dx, dy, ca, sa, hl_a, hw_a, cb, sb, hl_b, hw_b):
    """Per-axis |projected center gap| - (r_a + r_b); >0 on any axis separates."""
    cab = ca * cb + sa * sb
    sab = ca * sb - sa * cb
    acab = np.abs(cab)
    asab = np.abs(sab)
    g1 = np.abs(dx * ca + dy * sa) - (hl_a + hl_b * acab + hw_b * asab)
    g2 = np.abs(-dx * sa + dy * ca) - (hw_a + hl_b * asab + hw_b * acab)
    g3 = np.abs(dx * cb + dy * sb) - (hl_b + hl_a * acab + hw_a * asab)
    g4 = np.abs(-dx * sb + dy * cb) - (hw_b + hl_a * asab + hw_a * acab)
    return g1, g2, g3, g4


def overlap_mask_numpy(pose_a, half_a, poses_b, half_b):
    pose_a = np.asarray(pose_a, dtype=np.float64)
    poses_b = np.asarray(poses_b, dtype=np.float64)
    ca, sa = np.cos(pose_a[2]), np.sin(pose_a[2])
    cb, sb = np.cos(poses_b[:, 2]), np.sin(poses_b[:, 2])
    dx = poses_b[:, 0] - pose_a[0]
    dy = poses_b[:, 1] - pose_a[1]
    g1, g2, g3, g4 = _axis_gaps(
        dx, dy, ca, sa, half_a[0], half_a[1], cb, sb, half_b[0], half_b[1]
    )
    return (g1 <= 0.0) & (g2 <= 0.0) & (g3 <= 0.0) & (g4 <= 0.0)


def overlap_counts_numpy(poses_a, half_a, samples, half_b, _block=2_000_000):
    poses_a = np.asarray(poses_a, dtype=np.float64)
    samples = np.asarray(samples, dtype=np.float64)
    cb = np.cos(samples[:, 2])[None, :]
    sb = np.sin(samples[:, 2])[None, :]
    out = np.empty(len(poses_a), dtype=np.int64)
    rows = max(1, _block // max(len(samples), 1))
    for lo in range(0, len(poses_a), rows):
        block = poses_a[lo:lo + rows]
        ca = np.cos(block[:, 2])[:, None]
        sa = np.sin(block[:, 2])[:, None]
        dx = samples[None, :, 0] - block[:, 0][:, None]
        dy = samples[None, :, 1] - block[:, 1][:, None]
        g1, g2, g3, g4 = _axis_gaps(
            dx, dy, ca, sa, half_a[0], half_a[1], cb, sb, half_b[0], half_b[1]
        )
        hit = (g1 <= 0.0) & (g2 <= 0.0) & (g3 <= 0.0) & (g4 <= 0.0)
        out[lo:lo + rows] = hit.sum(axis=1)
    return out


def rowwise_overlap_fraction_numpy(poses_a, half_a, poses_b, half_b):
    poses_a = np.asarray(poses_a, dtype=np.float64)
    poses_b = np.asarray(poses_b, dtype=np.float64)
    ca = np.cos(poses_a[:, 2])[:, None]
    sa = np.sin(poses_a[:, 2])[:, None]
    cb = np.cos(poses_b[:, :, 2])
    sb = np.sin(poses_b[:, :, 2])
    dx = poses_b[:, :, 0] - poses_a[:, 0][:, None]
    dy = poses_b[:, :, 1] - poses_a[:, 1][:, None]
    g1, g2, g3, g4 = _axis_gaps(
        dx, dy, ca, sa, half_a[0], half_a[1], cb, sb, half_b[0], half_b[1]
    )
    hit = (g1 <= 0.0) & (g2 <= 0.0) & (g3 <= 0.0) & (g4 <= 0.0)
    return hit.mean(axis=1)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, inline="always")
    def _sat_hit(dx, dy, ca, sa, hl_a, hw_a, cb, sb, hl_b, hw_b):
        cab = ca * cb + sa * sb
        sab = ca * sb - sa * cb
        acab = abs(cab)
        asab = abs(sab)
        if abs(dx * ca + dy * sa) > hl_a + hl_b * acab + hw_b * asab:
            return False
        if abs(-dx * sa + dy * ca) > hw_a + hl_b * asab + hw_b * acab:
            return False
        if abs(dx * cb + dy * sb) > hl_b + hl_a * acab + hw_a * asab:
            return False
        if abs(-dx * sb + dy * cb) > hw_b + hl_a * asab + hw_a * acab:
            return False
        return True

    @njit(cache=True)
    def _overlap_mask_nb(pose_a, hl_a, hw_a, poses_b, hl_b, hw_b):
        n = poses_b.shape[0]
        out = np.empty(n, dtype=np.bool_)
        ca = np.cos(pose_a[2])
        sa = np.sin(pose_a[2])
        for i in range(n):
            cb = np.cos(poses_b[i, 2])
            sb = np.sin(poses_b[i, 2])
            out[i] = _sat_hit(
                poses_b[i, 0] - pose_a[0],
                poses_b[i, 1] - pose_a[1],
                ca, sa, hl_a, hw_a, cb, sb, hl_b, hw_b,
            )
        return out

    @njit(cache=True)
    def _overlap_counts_nb(poses_a, hl_a, hw_a, samples, hl_b, hw_b):
        m = poses_a.shape[0]
        n = samples.shape[0]
        cb = np.empty(n)
        sb = np.empty(n)
        for j in range(n):
            cb[j] = np.cos(samples[j, 2])
            sb[j] = np.sin(samples[j, 2])
        out = np.zeros(m, dtype=np.int64)
        for i in range(m):
            ca = np.cos(poses_a[i, 2])
            sa = np.sin(poses_a[i, 2])
            c = 0
            for j in range(n):
                if _sat_hit(
                    samples[j, 0] - poses_a[i, 0],
                    samples[j, 1] - poses_a[i, 1],
                    ca, sa, hl_a, hw_a, cb[j], sb[j], hl_b, hw_b,
                ):
                    c += 1
            out[i] = c
        return out

    @njit(cache=True)
    def _rowwise_overlap_fraction_nb(poses_a, hl_a, hw_a, poses_b, hl_b, hw_b):
        k = poses_b.shape[0]
        n = poses_b.shape[1]
        out = np.empty(k, dtype=np.float64)
        for i in range(k):
            ca = np.cos(poses_a[i, 2])
            sa = np.sin(poses_a[i, 2])
            c = 0
            for j in range(n):
                cb = np.cos(poses_b[i, j, 2])
                sb = np.sin(poses_b[i, j, 2])
                if _sat_hit(
                    poses_b[i, j, 0] - poses_a[i, 0],
                    poses_b[i, j, 1] - poses_a[i, 1],
                    ca, sa, hl_a, hw_a, cb, sb, hl_b, hw_b,
                ):
                    c += 1
            out[i] = c / n
        return out

    def overlap_mask_numba(pose_a, half_a, poses_b, half_b):
        return _overlap_mask_nb(
            np.ascontiguousarray(pose_a, dtype=np.float64),
            float(half_a[0]), float(half_a[1]),
            np.ascontiguousarray(poses_b, dtype=np.float64),
            float(half_b[0]), float(half_b[1]),
        )

    def overlap_counts_numba(poses_a, half_a, samples, half_b):
        return _overlap_counts_nb(
            np.ascontiguousarray(poses_a, dtype=np.float64),
            float(half_a[0]), float(half_a[1]),
            np.ascontiguousarray(samples, dtype=np.float64),
            float(half_b[0]), float(half_b[1]),
        )

    def rowwise_overlap_fraction_numba(poses_a, half_a, poses_b, half_b):
        return _rowwise_overlap_fraction_nb(
            np.ascontiguousarray(poses_a, dtype=np.float64),
            float(half_a[0]), float(half_a[1]),
            np.ascontiguousarray(poses_b, dtype=np.float64),
            float(half_b[0]), float(half_b[1]),
        )


if USING_NUMBA:
    overlap_mask = overlap_mask_numba
    overlap_counts = overlap_counts_numba
    rowwise_overlap_fraction = rowwise_overlap_fraction_numba
else:
    overlap_mask = overlap_mask_numpy
    overlap_counts = overlap_counts_numpy
    rowwise_overlap_fraction = rowwise_overlap_fraction_numpy


def overlap_single(pose_a, half_a, pose_b, half_b) -> bool:
    """Exact overlap test for one pair of oriented rectangles."""
    pose_b = np.asarray(pose_b, dtype=np.float64).reshape(1, 3)
    return bool(overlap_mask(np.asarray(pose_a, dtype=np.float64), half_a, pose_b, half_b)[0])


def _corners(pose, half):
    c, s = np.cos(pose[2]), np.sin(pose[2])
    hl, hw = half
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + pose[:2]


def clearance_numpy(pose_a, half_a, pose_b, half_b) -> float:
    """Minimum distance between two disjoint rectangles (0 when overlapping)."""
    if overlap_mask_numpy(np.asarray(pose_a, float),
                          half_a,
                          np.asarray(pose_b, float).reshape(1, 3),
                          half_b)[0]:
        return 0.0
    ca = _corners(np.asarray(pose_a, float), half_a)
    cb = _corners(np.asarray(pose_b, float), half_b)
    best = np.inf
    for pts, seg in ((ca, cb), (cb, ca)):
        a = seg
        b = np.roll(seg, -1, axis=0)
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        diff = pts[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", diff, ab) / denom, 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * ab[None, :, :]
        d = np.sqrt(((pts[:, None, :] - closest) ** 2).sum(-1))
        best = min(best, float(d.min()))
    return best


if HAVE_NUMBA:

    @njit(cache=True)
    def _clearance_nb(ax, ay, atheta, ahl, ahw, bx, by, btheta, bhl, bhw):
        ca = np.cos(atheta)
        sa = np.sin(atheta)
        cb = np.cos(btheta)
        sb = np.sin(btheta)
        if _sat_hit(bx - ax, by - ay, ca, sa, ahl, ahw, cb, sb, bhl, bhw):
            return 0.0
        pa = np.empty((4, 2))
        pb = np.empty((4, 2))
        for i, (u, v) in enumerate(((ahl, ahw), (-ahl, ahw), (-ahl, -ahw), (ahl, -ahw))):
            pa[i, 0] = ax + u * ca - v * sa
            pa[i, 1] = ay + u * sa + v * ca
        for i, (u, v) in enumerate(((bhl, bhw), (-bhl, bhw), (-bhl, -bhw), (bhl, -bhw))):
            pb[i, 0] = bx + u * cb - v * sb
            pb[i, 1] = by + u * sb + v * cb
        best = np.inf
        for src, dst in ((pa, pb), (pb, pa)):
            for i in range(4):
                x0, y0 = dst[i, 0], dst[i, 1]
                x1, y1 = dst[(i + 1) % 4, 0], dst[(i + 1) % 4, 1]
                ex, ey = x1 - x0, y1 - y0
                denom = ex * ex + ey * ey
                for j in range(4):
                    px, py = src[j, 0], src[j, 1]
                    t = ((px - x0) * ex + (py - y0) * ey) / denom
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                    dx = px - (x0 + t * ex)
                    dy = py - (y0 + t * ey)
                    d = np.sqrt(dx * dx + dy * dy)
                    if d < best:
                        best = d
        return best

    def clearance_numba(pose_a, half_a, pose_b, half_b) -> float:
        pa = np.asarray(pose_a, dtype=np.float64)
        pb = np.asarray(pose_b, dtype=np.float64)
        return float(_clearance_nb(pa[0], pa[1], pa[2], float(half_a[0]), float(half_a[1]),
                                   pb[0], pb[1], pb[2], float(half_b[0]), float(half_b[1])))


if USING_NUMBA:
    clearance = clearance_numba
else:
    clearance = clearance_numpy
