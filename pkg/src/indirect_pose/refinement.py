"""Dense-point pose refinement under a Huber reprojection loss.

The refiner matches many projected model-surface points against their
observed image locations, so a handful of bad keypoints or gross outliers
cannot dominate the final estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotEnoughPoints
from .pnp import PnPSolution, RefineConfig, _robust_terms, levenberg_marquardt, reprojection_residuals
from .se3 import CameraIntrinsics, RigidTransform

MIN_SURFACE_SAMPLES = 50
MIN_VALID_OBSERVATIONS = 6


@dataclass(frozen=True, eq=False)
class DenseModelSample:
    points: np.ndarray  # (N, 3), object frame

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RobustLossConfig:
    """Huber scale in pixels, LM budget, and the trimmed refit.

    After the Huber solve, points whose residual exceeds
    ``reject_factor * huber_delta`` are dropped and the pose is solved again
    on the rest; ``None`` disables the refit.
    """

    huber_delta: float = 5.0
    max_iterations: int = 100
    reject_factor: Optional[float] = 3.0

    def __post_init__(self):
        if not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.reject_factor is not None and not self.reject_factor > 0:
            raise ValueError("reject_factor must be positive")


def sample_model_surface(model, count: int, seed: int) -> DenseModelSample:
    """Seeded, area-uniform samples on the faces of the model's bounding cuboid.

    ``model`` is an ``ObjectModel`` or a ``(w, h, d)`` sequence of dimensions.
    """
    if count < MIN_SURFACE_SAMPLES:
        raise ValueError(f"need at least {MIN_SURFACE_SAMPLES} surface samples")
    dims = np.asarray(getattr(model, "dimensions", model), dtype=float)
    half = 0.5 * dims
    w, h, d = dims
    # faces normal to x, y, z (two each)
    areas = np.array([h * d, h * d, w * d, w * d, w * h, w * h])
    if areas.sum() <= 0:
        raise ValueError("model has no surface area")
    rng = np.random.default_rng(seed)
    face = rng.choice(6, size=count, p=areas / areas.sum())
    pts = rng.uniform(-1.0, 1.0, size=(count, 3)) * half
    axis = face // 2
    sign = np.where(face % 2 == 0, -1.0, 1.0)
    pts[np.arange(count), axis] = sign * half[axis]
    return DenseModelSample(pts)


def refine_pose(
    initial: RigidTransform,
    sample: DenseModelSample,
    observed: Sequence[Optional[Sequence[float]]],
    k: CameraIntrinsics,
    cfg: RobustLossConfig = RobustLossConfig(),
) -> PnPSolution:
    """Huber-robust LM refinement; ``observed[i]`` is the pixel seen for
    ``sample.points[i]`` or ``None`` when that point was not observed."""
    if len(observed) != len(sample):
        raise ValueError("one observation slot per sample point is required")
    valid = np.array([o is not None for o in observed], dtype=bool)
    if valid.sum() < MIN_VALID_OBSERVATIONS:
        raise NotEnoughPoints(f"need {MIN_VALID_OBSERVATIONS} valid observations, got {int(valid.sum())}")
    X = sample.points[valid]
    uv = np.array([o for o in observed if o is not None], dtype=float)
    w = np.ones(len(X))
    lm_cfg = RefineConfig(max_iterations=cfg.max_iterations)
    first = levenberg_marquardt(initial, X, uv, w, k, lm_cfg, huber_delta=cfg.huber_delta)
    if cfg.reject_factor is None or math.isinf(cfg.huber_delta):
        return first
    resid = np.hypot(*reprojection_residuals(first.pose, X, uv, k).reshape(-1, 2).T)
    keep = resid <= cfg.reject_factor * cfg.huber_delta
    if keep.all() or keep.sum() < MIN_VALID_OBSERVATIONS:
        return first
    second = levenberg_marquardt(first.pose, X[keep], uv[keep], w[keep], k, lm_cfg, huber_delta=cfg.huber_delta)
    # keep the guarantee that refinement never ends above the starting objective
    if robust_cost(second.pose, X, uv, k, cfg.huber_delta) > robust_cost(initial, X, uv, k, cfg.huber_delta):
        return first
    # dropped points carry the largest costs, so the joined history stays non-increasing
    return PnPSolution(second.pose, second.reprojection_rmse, first.iterations + second.iterations,
                       second.converged, first.cost_history + second.cost_history)


def robust_cost(pose: RigidTransform, X: np.ndarray, uv: np.ndarray, k: CameraIntrinsics, huber_delta: float) -> float:
    """Mean Huber cost of the reprojection residuals (squared norm inside ``huber_delta``)."""
    sq = (reprojection_residuals(pose, X, uv, k).reshape(-1, 2) ** 2).sum(axis=1)
    rho, _ = _robust_terms(sq, huber_delta)
    return float(rho.mean())

