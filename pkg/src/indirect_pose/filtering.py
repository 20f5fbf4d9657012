"""Exponentially weighted smoothing of pose streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .se3 import RigidTransform, slerp

DEFAULT_ALPHA = 0.095
DEFAULT_FRAME_RATE = 15.0
DEFAULT_GATE = 0.30


@dataclass(frozen=True)
class FilterState:
    alpha: float = DEFAULT_ALPHA
    current: Optional[RigidTransform] = None
    gate_distance: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.gate_distance is not None and not self.gate_distance > 0:
            raise ValueError("gate_distance must be positive")


def update(state: FilterState, measurement: RigidTransform) -> tuple[FilterState, RigidTransform]:
    """Blend ``measurement`` into the state; returns (new state, filtered pose).

    Translation moves a fraction alpha toward the measurement, rotation
    slerps by alpha. A measurement jumping farther than ``gate_distance``
    is ignored.
    """
    old = state.current
    if old is None:
        return replace(state, current=measurement), measurement
    if measurement == old:
        return state, old
    if state.gate_distance is not None and math.dist(old.translation, measurement.translation) > state.gate_distance:
        return state, old
    a = state.alpha
    t = tuple(o + a * (m - o) for o, m in zip(old.translation, measurement.translation))
    filtered = RigidTransform(slerp(old.rotation, measurement.rotation, a), t)
    return replace(state, current=filtered), filtered


def step_response_frames(alpha: float, fraction: float) -> int:
    """Smallest n with ``1 - (1 - alpha)**n >= fraction``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    if alpha == 1.0:
        return 1
    n = max(1, math.ceil(math.log(1.0 - fraction) / math.log(1.0 - alpha)))
    # guard the closed form against rounding at exact boundaries
    while n > 1 and 1.0 - (1.0 - alpha) ** (n - 1) >= fraction:
        n -= 1
    while 1.0 - (1.0 - alpha) ** n < fraction:
        n += 1
    return n


def settling_time(alpha: float, fraction: float = 0.95, frame_rate: float = DEFAULT_FRAME_RATE) -> float:
    return step_response_frames(alpha, fraction) / frame_rate
