"""Regenerate the golden grid vectors the console tests check against.

Run from the repository root:

    python3 frontend/golden/generate.py

Each vector carries the binary wire payload (base64), the threshold, the
expected unsafe mask from the risk engine's classifier, and a handful of
expected cell values.
"""

import base64
import json
import math
from pathlib import Path

import numpy as np

from latrisk.geometry import EgoState, Pose2
from latrisk.licom import (
    EgoTemplate,
    GridSpec,
    RiskGrid,
    classify,
    compute_licom,
    serialize_grid,
)
from latrisk.licp import SafetyConfig
from latrisk.prediction import MotionModel, single_mode

LAM = 0.3
OUT = Path(__file__).parent


def vector_from_grid(name: str, grid: RiskGrid) -> dict:
    grid = grid.quantized()
    payload = serialize_grid(grid)
    mask = classify(grid, LAM)
    rng = np.random.default_rng(5)
    probes = []
    for _ in range(12):
        row = int(rng.integers(0, grid.spec.height))
        col = int(rng.integers(0, grid.spec.width))
        probes.append({"row": row, "col": col, "value": float(grid.values[row, col])})
    return {
        "name": name,
        "lam": LAM,
        "payload_b64": base64.b64encode(payload).decode(),
        "width": grid.spec.width,
        "height": grid.spec.height,
        "resolution": grid.spec.resolution,
        "origin": list(grid.spec.origin),
        "tau": grid.tau,
        "unsafe_mask_rows": ["".join("1" if v else "0" for v in row) for row in mask],
        "unsafe_count": int(mask.sum()),
        "probes": probes,
    }


def main() -> None:
    vectors = []

    rng = np.random.default_rng(42)
    spec = GridSpec((-4.0, -3.0), 0.5, 16, 12)
    values = np.clip(rng.random((12, 16)) ** 2, 0.0, 1.0)
    vectors.append(vector_from_grid("random-values", RiskGrid(spec, values, tau=0.5)))

    vectors.append(vector_from_grid(
        "all-zero", RiskGrid(GridSpec((0.0, 0.0), 0.5, 8, 8), np.zeros((8, 8)), tau=1.0)
    ))

    boundary = np.zeros((6, 6))
    boundary[2, 3] = LAM          # exactly at the threshold: unsafe
    boundary[3, 3] = LAM - 1e-4   # just below: safe
    boundary[4, 4] = 1.0
    vectors.append(vector_from_grid(
        "threshold-boundary", RiskGrid(GridSpec((0.0, 0.0), 1.0, 6, 6), boundary, tau=2.0)
    ))

    # a computed map from the risk engine itself
    template = EgoTemplate(EgoState(Pose2(0, 0, 0), 0.0, 0.0), 2.25, 1.0)
    belief = single_mode(Pose2(5.0, 2.0, math.pi), np.diag([0.6, 0.6, 0.02]))
    model = MotionModel(q=np.diag([0.15, 0.15, 0.01]), velocity=(-2.0, 0.0))
    grid = compute_licom(
        GridSpec.centered_on(0.0, 0.0, extent=16.0, resolution=0.5),
        template, belief, model, 1.0, SafetyConfig(lam=LAM),
        np.random.default_rng(7), samples=4000,
    )
    vectors.append(vector_from_grid("computed-map", grid))

    out_path = OUT / "grids.json"
    out_path.write_text(json.dumps(vectors, indent=1))
    print(f"wrote {out_path} ({len(vectors)} vectors)")


if __name__ == "__main__":
    main()
