"""Decision-latency semantics: drawing human + network delays, and the
queue of pending decisions that land on a future simulation step.

The ego keeps tracking its default plan while a decision is in flight; a
decision takes effect at the first step boundary at or after
issued_at + latency (ceiling quantization: a decision cannot act before it
arrives).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .vqa_actions import DecisionAction

Component = float | tuple[float, float]


@dataclass(frozen=True)
class LatencyModel:
    """Human and network delay components, composed by summation.

    Each component is either a fixed value in seconds or a
    (mean, +-jitter) pair drawn uniformly.
    """

    human: Component = 0.2
    network: Component = 0.0

    def __post_init__(self):
        for c in (self.human, self.network):
            if isinstance(c, tuple):
                mean, jitter = c
                if mean < 0.0 or jitter < 0.0:
                    raise ValueError("latency components must be >= 0")
            elif c < 0.0:
                raise ValueError("latency components must be >= 0")


def _draw_component(c: Component, rng: np.random.Generator) -> float:
    if isinstance(c, tuple):
        mean, jitter = c
        return max(0.0, mean + (2.0 * rng.random() - 1.0) * jitter)
    return float(c)


def draw_latency(model: LatencyModel, rng: np.random.Generator) -> float:
    """Total decision latency for one query: human + network."""
    return _draw_component(model.human, rng) + _draw_component(model.network, rng)


@dataclass(frozen=True)
class PendingDecision:
    """A decision in flight: issued now, applying at a future step boundary."""

    issued_at: float
    latency: float
    apply_at: float
    apply_step: int
    action: DecisionAction
    query_id: str | None = None

    def __post_init__(self):
        if self.apply_at + 1e-12 < self.issued_at:
            raise ValueError("apply_at must not precede issued_at")


class DecisionQueue:
    """Pending decisions ordered by application step, FIFO among equals.

    Owned by the simulation loop: enqueue and poll_due are the only
    mutations and a single writer performs both.
    """

    def __init__(self, step: float = 0.01):
        if step <= 0.0:
            raise ValueError("step must be > 0")
        self.step = step
        self._heap: list[tuple[int, int, PendingDecision]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def enqueue(
        self,
        action: DecisionAction,
        issued_at: float,
        latency: float,
        query_id: str | None = None,
    ) -> PendingDecision:
        if latency < 0.0:
            raise ValueError("latency must be >= 0")
        apply_step = math.ceil((issued_at + latency) / self.step - 1e-9)
        decision = PendingDecision(
            issued_at=issued_at,
            latency=latency,
            apply_at=apply_step * self.step,
            apply_step=apply_step,
            action=action,
            query_id=query_id,
        )
        heapq.heappush(self._heap, (apply_step, self._seq, decision))
        self._seq += 1
        return decision

    def poll_due(self, now: float) -> list[PendingDecision]:
        """Remove and return every decision whose apply time has arrived."""
        now_step = math.floor(now / self.step + 1e-9)
        due = []
        while self._heap and self._heap[0][0] <= now_step:
            due.append(heapq.heappop(self._heap)[2])
        return due

    def peek_next_step(self) -> int | None:
        return self._heap[0][0] if self._heap else None
