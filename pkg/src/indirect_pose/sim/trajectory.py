"""Seeded camera trajectories in the robot frame."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..se3 import RigidTransform, look_at
from .scene import LOOK_TARGET


@dataclass(frozen=True)
class CameraBox:
    """Axis-aligned region (robot frame) the camera may occupy."""

    lower: tuple[float, float, float] = (1.3, -0.3, 0.3)
    upper: tuple[float, float, float] = (2.0, 0.3, 0.5)

    def contains(self, p: Sequence[float], tol: float = 1e-12) -> bool:
        return all(lo - tol <= v <= hi + tol for v, lo, hi in zip(p, self.lower, self.upper))


MAX_STEP = 0.02  # m per frame
MAX_SPEED = 0.015


def camera_trajectory(
    kind: str,
    duration_frames: int,
    seed: int,
    box: CameraBox = CameraBox(),
    target: Sequence[float] = LOOK_TARGET,
) -> list[RigidTransform]:
    """Robot-from-camera poses, one per frame, always looking at ``target``.

    ``handheld`` is a momentum random walk clamped to ``box`` with per-frame
    motion under 2 cm; ``static`` holds the box center.
    """
    if duration_frames < 1:
        raise ValueError("duration must be at least one frame")
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    rng = np.random.default_rng(seed)
    if kind == "static":
        center = 0.5 * (lo + hi)
        return [look_at(center, target)] * duration_frames
    if kind != "handheld":
        raise ValueError(f"unknown trajectory kind {kind!r}")
    pos = lo + rng.random(3) * (hi - lo)
    vel = np.zeros(3)
    out = []
    for _ in range(duration_frames):
        out.append(look_at(pos, target))
        vel = 0.95 * vel + 0.002 * rng.standard_normal(3)
        speed = np.linalg.norm(vel)
        if speed > MAX_SPEED:
            vel *= MAX_SPEED / speed
        nxt = pos + vel
        # reflect off the walls, then hard clamp
        over = (nxt < lo) | (nxt > hi)
        vel[over] *= -1.0
        pos = np.clip(nxt, lo, hi)
    return out

