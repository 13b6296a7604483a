"""Decision actions shared between the risk engine and the query layer."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2

PROCEED = "proceed-on-trajectory"
BRAKE = "brake-to-stop"
WAYPOINT = "waypoint-insert"


@dataclass(frozen=True)
class DecisionAction:
    """What the ego does once an answer lands: keep the reference trajectory,
    brake to a stop, or splice in a new waypoint."""

    kind: str
    deceleration: float = 6.0
    waypoint: Pose2 | None = None

    def __post_init__(self):
        if self.kind not in (PROCEED, BRAKE, WAYPOINT):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind == BRAKE and not self.deceleration > 0.0:
            raise ValueError("brake deceleration must be > 0")
        if self.kind == WAYPOINT:
            if self.waypoint is None:
                raise ValueError("waypoint action needs a target pose")
            if not (math.isfinite(self.waypoint.x) and math.isfinite(self.waypoint.y)):
                raise ValueError("waypoint must be finite")
