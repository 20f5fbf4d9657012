"""Single-frame estimation of the object pose in the robot frame.

Simulated detections for the robot and the object each go through PnP; the
object estimate is optionally refined against dense surface observations,
and the two camera-frame poses are combined into the robot-frame pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..belief import associate_vertices, extract_peaks, instance_correspondences
from ..errors import PoseError
from ..filtering import FilterState, update
from ..pnp import PnPSolution, RefineConfig, correspondence_arrays, solve_pnp_arrays
from ..refinement import DenseModelSample, RobustLossConfig, refine_pose, sample_model_surface
from ..se3 import RigidTransform, geodesic_angle, object_in_robot_frame
from ..sim.perception import (
    noise_rng,
    observe_dense,
    observe_points,
    render_belief_stacks,
    render_robot_beliefs,
)
from ..sim.scene import OBJECT_MAP, ROBOT_MAP, NoiseConfig, SceneConfig

ROBOT_STREAM, OBJECT_STREAM, DENSE_STREAM = 0, 1, 2


@dataclass(frozen=True)
class PipelineConfig:
    refine: bool = False
    fidelity: str = "keypoint"  # or "belief"
    include_centroid: bool = True
    dense_samples: int = 500
    huber_delta: float = 5.0
    lm: RefineConfig = RefineConfig()
    # PnP fits worse than this are treated as failed detections; None keeps every fit
    max_rmse_px: Optional[float] = 20.0

    def __post_init__(self):
        if self.fidelity not in ("keypoint", "belief"):
            raise ValueError(f"unknown fidelity {self.fidelity!r}")
        if self.max_rmse_px is not None and not self.max_rmse_px > 0:
            raise ValueError("max_rmse_px must be positive")


@dataclass(frozen=True)
class FrameEstimate:
    cam_robot: Optional[RigidTransform]
    cam_object: Optional[RigidTransform]
    robot_object: Optional[RigidTransform]
    refined: bool = False
    reason: str = ""

    @property
    def dropped(self) -> bool:
        return self.robot_object is None


class _NoDetection(PoseError):
    pass


class PoorFit(PoseError):
    """PnP finished with a reprojection error too large to trust."""


def _accept(sol: PnPSolution, cfg: PipelineConfig) -> RigidTransform:
    if cfg.max_rmse_px is not None and not sol.reprojection_rmse <= cfg.max_rmse_px:
        raise PoorFit(f"reprojection RMSE {sol.reprojection_rmse:.1f} px")
    return sol.pose


@lru_cache(maxsize=64)
def _dense_sample(dimensions: tuple[float, float, float], count: int) -> DenseModelSample:
    return sample_model_surface(dimensions, count, seed=0)


def _robot_pose(scene: SceneConfig, noise: NoiseConfig, rng, cfg: PipelineConfig):
    k = scene.intrinsics
    kps = scene.robot_keypoints()
    if cfg.fidelity == "keypoint":
        uv, valid = observe_points(k, scene.cam_robot(), kps, noise, rng)
        return _accept(solve_pnp_arrays(kps[valid], uv[valid], np.ones(int(valid.sum())), k, cfg.lm), cfg)
    stack, _ = render_robot_beliefs(scene, noise, rng)
    best = {}
    for p in extract_peaks(stack):
        best.setdefault(p.map_index, p)  # peaks arrive in descending confidence
    idx = sorted(best)
    uv = ROBOT_MAP.to_image([best[i].position for i in idx]).reshape(-1, 2)
    w = np.array([best[i].confidence for i in idx])
    return _accept(solve_pnp_arrays(kps[idx].reshape(-1, 3), uv, w, k, cfg.lm), cfg)


def _object_pose(scene: SceneConfig, index: int, noise: NoiseConfig, rng, cfg: PipelineConfig):
    k = scene.intrinsics
    model = scene.objects[index].model
    kps = model.keypoints
    if cfg.fidelity == "keypoint":
        uv, valid = observe_points(k, scene.cam_object(index), kps, noise, rng)
        if not cfg.include_centroid:
            valid[8] = False
        return _accept(solve_pnp_arrays(kps[valid], uv[valid], np.ones(int(valid.sum())), k, cfg.lm), cfg)
    rendered = render_belief_stacks(scene, model.name, noise, rng)
    instances = associate_vertices(extract_peaks(rendered.beliefs), rendered.affinities)
    if not instances:
        raise _NoDetection("no centroid peak")
    # single-object scenes: keep the best-supported instance
    inst = max(instances, key=lambda i: (i.assigned_count, i.centroid.confidence))
    corrs = instance_correspondences(inst, kps, OBJECT_MAP.scale, cfg.include_centroid, OBJECT_MAP.offset)
    X, uv, w = correspondence_arrays(corrs)
    return _accept(solve_pnp_arrays(X, uv, w, k, cfg.lm), cfg)


def estimate_frame(
    scene: SceneConfig,
    noise: NoiseConfig,
    key: tuple[int, ...],
    cfg: PipelineConfig = PipelineConfig(),
    object_index: int = 0,
) -> FrameEstimate:
    """Run the full pipeline on one simulated frame; ``key`` selects the
    random streams so repeated calls are reproducible."""
    try:
        cam_robot = _robot_pose(scene, noise, noise_rng(noise, *key, ROBOT_STREAM), cfg)
    except PoseError as exc:
        return FrameEstimate(None, None, None, reason=f"robot: {type(exc).__name__}")
    try:
        cam_object = _object_pose(scene, object_index, noise, noise_rng(noise, *key, OBJECT_STREAM), cfg)
    except PoseError as exc:
        return FrameEstimate(cam_robot, None, None, reason=f"object: {type(exc).__name__}")
    refined = False
    if cfg.refine:
        model = scene.objects[object_index].model
        sample = _dense_sample(model.dimensions, cfg.dense_samples)
        obs = observe_dense(
            scene.intrinsics, scene.cam_object(object_index), sample.points, noise,
            noise_rng(noise, *key, DENSE_STREAM),
        )
        try:
            sol = refine_pose(cam_object, sample, obs, scene.intrinsics, RobustLossConfig(cfg.huber_delta))
            cam_object, refined = sol.pose, True
        except PoseError:
            pass
    return FrameEstimate(cam_robot, cam_object, object_in_robot_frame(cam_robot, cam_object), refined)


@dataclass(frozen=True)
class PoseErrors:
    err_x: float
    err_y: float
    err_z: float
    lateral: float
    rotation: float


def pose_error(estimate: RigidTransform, truth: RigidTransform) -> PoseErrors:
    """Robot-frame translation error components, lateral (x-y) error, and
    geodesic rotation error."""
    ex, ey, ez = (e - t for e, t in zip(estimate.translation, truth.translation))
    return PoseErrors(ex, ey, ez, math.sqrt(ex * ex + ey * ey), geodesic_angle(estimate.rotation, truth.rotation))


class StreamFilter:
    """Exponential filtering of the pipeline output.

    ``inputs`` filters the camera-frame robot and object poses separately
    and recombines them; ``output`` filters the combined robot-frame pose.
    ``robot_alpha`` gives the robot stream its own weight in ``inputs`` mode.
    """

    def __init__(self, alpha: float, mode: str = "inputs", gate_distance: float | None = None,
                 robot_alpha: float | None = None):
        if mode not in ("inputs", "output"):
            raise ValueError(f"unknown filter mode {mode!r}")
        self.mode = mode
        self.robot = FilterState(alpha if robot_alpha is None else robot_alpha, None, gate_distance)
        self.object = FilterState(alpha, None, gate_distance)
        self.output = FilterState(alpha, None, gate_distance)
        self.current: Optional[RigidTransform] = None

    def push(self, est: FrameEstimate) -> Optional[RigidTransform]:
        """Feed one frame; dropped frames leave the filtered pose unchanged."""
        if est.dropped:
            return self.current
        if self.mode == "output":
            self.output, self.current = update(self.output, est.robot_object)
        else:
            self.robot, cr = update(self.robot, est.cam_robot)
            self.object, co = update(self.object, est.cam_object)
            self.current = object_in_robot_frame(cr, co)
        return self.current
