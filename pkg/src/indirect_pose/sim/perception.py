"""Synthetic stand-in for the keypoint networks.

Two fidelities: ``observe_keypoints`` emits noisy pixel detections directly;
``render_belief_stacks`` renders Gaussian belief maps and centroid affinity
fields that must go through the decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..belief import AffinityFieldStack, BeliefMapStack
from ..se3 import MIN_DEPTH, CameraIntrinsics, RigidTransform
from .scene import OBJECT_MAP, ROBOT_MAP, MapConfig, NoiseConfig, SceneConfig

Detection = tuple[int, Optional[tuple[float, float]]]


def noise_rng(noise: NoiseConfig, *keys: int) -> np.random.Generator:
    """Generator for one independent stream, keyed by the noise seed."""
    return np.random.default_rng([noise.seed, *keys])


def _project_all(k: CameraIntrinsics, cam_from_frame: RigidTransform, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pc = cam_from_frame.transform_points(pts)
    z = pc[:, 2]
    front = z > MIN_DEPTH
    safe = np.where(front, z, 1.0)
    uv = np.column_stack((k.fx * pc[:, 0] / safe + k.cx, k.fy * pc[:, 1] / safe + k.cy))
    return uv, front


def _in_bounds(k: CameraIntrinsics, uv: np.ndarray) -> np.ndarray:
    return (uv[:, 0] >= 0) & (uv[:, 0] < k.width) & (uv[:, 1] >= 0) & (uv[:, 1] < k.height)


def observe_points(
    k: CameraIntrinsics,
    cam_from_frame: RigidTransform,
    points: np.ndarray,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Array form of ``observe_keypoints``: (N, 2) pixels and a validity mask."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(points)
    uv, front = _project_all(k, cam_from_frame, points)
    # fixed draw order keeps streams aligned across noise levels
    jitter = rng.standard_normal((n, 2))
    drop = rng.random(n)
    if noise.pixel_sigma > 0:
        uv = uv + noise.pixel_sigma * jitter
    valid = front & (drop >= noise.dropout_prob) & _in_bounds(k, uv)
    if noise.dropout_prob >= 1.0:
        valid[:] = False
    return uv, valid


def observe_keypoints(
    scene: SceneConfig,
    keypoints: np.ndarray,
    cam_from_frame: RigidTransform,
    noise: NoiseConfig,
    rng: np.random.Generator | None = None,
) -> list[Detection]:
    """Noisy detections ``(keypoint id, pixel or None)`` of frame-expressed keypoints.

    Points behind the camera, dropped out, or landing outside the image are None.
    """
    rng = rng if rng is not None else noise_rng(noise)
    uv, valid = observe_points(scene.intrinsics, cam_from_frame, keypoints, noise, rng)
    return [(i, (float(uv[i, 0]), float(uv[i, 1])) if valid[i] else None) for i in range(len(uv))]


def observe_dense(
    k: CameraIntrinsics,
    cam_from_object: RigidTransform,
    points: np.ndarray,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> list[Optional[tuple[float, float]]]:
    """Dense surface observations for the refiner: Gaussian jitter plus a
    fraction of gross outliers displaced ``outlier_px`` in a random direction."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(points)
    uv, front = _project_all(k, cam_from_object, points)
    jitter = rng.standard_normal((n, 2))
    is_outlier = rng.random(n) < noise.outlier_fraction
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    uv = uv + noise.pixel_sigma * jitter
    uv[is_outlier] += noise.outlier_px * np.column_stack((np.cos(theta), np.sin(theta)))[is_outlier]
    valid = front & _in_bounds(k, uv)
    return [(float(uv[i, 0]), float(uv[i, 1])) if valid[i] else None for i in range(n)]


@dataclass(frozen=True, eq=False)
class RenderedObjects:
    beliefs: BeliefMapStack
    affinities: AffinityFieldStack
    # (instances, 9, 2) map-grid keypoints actually rendered; NaN where dropped
    keypoints_grid: np.ndarray
    map_config: MapConfig


def _gaussian(xs: np.ndarray, ys: np.ndarray, center: Sequence[float], sigma: float) -> np.ndarray:
    dx = xs[None, :] - center[0]
    dy = ys[:, None] - center[1]
    return np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def _add_false_positives(values: np.ndarray, noise: NoiseConfig, rng: np.random.Generator, xs, ys) -> None:
    n, h, w = values.shape
    counts = rng.poisson(noise.false_positive_rate, size=n)
    for i in range(n):
        for _ in range(int(counts[i])):
            c = (rng.uniform(0, w - 1), rng.uniform(0, h - 1))
            amp = rng.uniform(0.2, 1.0)
            values[i] = np.maximum(values[i], amp * _gaussian(xs, ys, c, noise.blob_sigma))


def render_belief_stacks(
    scene: SceneConfig,
    model_name: str,
    noise: NoiseConfig,
    rng: np.random.Generator | None = None,
    map_config: MapConfig = OBJECT_MAP,
) -> RenderedObjects:
    """Belief maps (8 vertices + centroid) and vertex affinity fields for
    every placed instance of ``model_name``."""
    rng = rng if rng is not None else noise_rng(noise, 1)
    k = scene.intrinsics
    sigma = noise.blob_sigma
    w, h = map_config.width, map_config.height
    xs, ys = np.arange(w, dtype=float), np.arange(h, dtype=float)
    instances = [i for i, o in enumerate(scene.objects) if o.model.name == model_name]
    beliefs = np.zeros((9, h, w))
    grid_kp = np.full((len(instances), 9, 2), np.nan)
    blobs = []  # per instance: (9, h, w) blob values, 0 where dropped
    for slot, idx in enumerate(instances):
        kps = scene.objects[idx].model.keypoints
        uv, valid = observe_points(k, scene.cam_object(idx), kps, noise, rng)
        g = map_config.to_grid(uv)
        inside = (g[:, 0] >= 0) & (g[:, 0] <= w - 1) & (g[:, 1] >= 0) & (g[:, 1] <= h - 1)
        inst_blobs = np.zeros((9, h, w))
        for j in range(9):
            if valid[j] and inside[j]:
                grid_kp[slot, j] = g[j]
                inst_blobs[j] = _gaussian(xs, ys, g[j], sigma)
        blobs.append(inst_blobs)
        beliefs = np.maximum(beliefs, inst_blobs)

    affinity = np.zeros((8, h, w, 2))
    if instances:
        stacked = np.stack(blobs)  # (I, 9, h, w)
        X, Y = np.meshgrid(xs, ys)
        for j in range(8):
            owner = np.argmax(stacked[:, j], axis=0)
            for slot in range(len(instances)):
                if np.isnan(grid_kp[slot, j, 0]):
                    continue
                vx, vy = grid_kp[slot, j]
                support = ((X - vx) ** 2 + (Y - vy) ** 2 <= (3.0 * sigma) ** 2) & (owner == slot)
                if np.isnan(grid_kp[slot, 8, 0]):
                    cen = map_config.to_grid(
                        _project_all(k, scene.cam_object(instances[slot]), np.zeros((1, 3)))[0]
                    )[0]
                else:
                    cen = grid_kp[slot, 8]
                d = np.stack((cen[0] - X, cen[1] - Y), axis=-1)
                norm = np.linalg.norm(d, axis=-1, keepdims=True)
                unit = np.divide(d, norm, out=np.zeros_like(d), where=norm > 0)
                affinity[j][support] = unit[support]

    _add_false_positives(beliefs, noise, rng, xs, ys)
    return RenderedObjects(
        BeliefMapStack(np.clip(beliefs, 0.0, 1.0)), AffinityFieldStack(affinity), grid_kp, map_config
    )


def render_robot_beliefs(
    scene: SceneConfig,
    noise: NoiseConfig,
    rng: np.random.Generator | None = None,
    map_config: MapConfig = ROBOT_MAP,
) -> tuple[BeliefMapStack, np.ndarray]:
    """One belief map per robot keypoint; returns the stack and the
    rendered grid positions (NaN where dropped or off-map)."""
    rng = rng if rng is not None else noise_rng(noise, 0)
    w, h = map_config.width, map_config.height
    xs, ys = np.arange(w, dtype=float), np.arange(h, dtype=float)
    kps = scene.robot_keypoints()
    uv, valid = observe_points(scene.intrinsics, scene.cam_robot(), kps, noise, rng)
    g = map_config.to_grid(uv)
    values = np.zeros((len(kps), h, w))
    grid_kp = np.full((len(kps), 2), np.nan)
    for j in range(len(kps)):
        if valid[j] and 0 <= g[j, 0] <= w - 1 and 0 <= g[j, 1] <= h - 1:
            grid_kp[j] = g[j]
            values[j] = _gaussian(xs, ys, g[j], noise.blob_sigma)
    _add_false_positives(values, noise, rng, xs, ys)
    return BeliefMapStack(np.clip(values, 0.0, 1.0)), grid_kp
