"""Scene and noise configuration for the perception simulator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..se3 import CameraIntrinsics, RigidTransform, compose, invert, look_at
from .models import ObjectModel, RobotKeypointModel, default_robot, load_object, yaw_rotation

# robot frame: x forward, y left, z up; origin at the torso base
WORKSPACE_CENTER = (0.50, -0.10, 0.0)
WORKSPACE_SIZE = (0.20, 0.20, 0.15)
LOOK_TARGET = (0.35, -0.08, 0.10)
CAMERA_HEIGHT = 0.40

ENVELOPE_DISTANCE = (1.0, 2.0)
ENVELOPE_AZIMUTH = math.radians(45.0)
ENVELOPE_HEIGHT = (0.1, 0.8)


@dataclass(frozen=True)
class NoiseConfig:
    pixel_sigma: float = 0.0
    dropout_prob: float = 0.0
    false_positive_rate: float = 0.0
    blob_sigma: float = 2.0  # map cells
    seed: int = 0
    # dense observations seen by the pose refiner
    outlier_fraction: float = 0.0
    outlier_px: float = 50.0

    def __post_init__(self):
        for name in ("pixel_sigma", "dropout_prob", "false_positive_rate", "blob_sigma", "outlier_fraction", "outlier_px"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.dropout_prob > 1 or self.outlier_fraction > 1:
            raise ValueError("probabilities must not exceed 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# simulator calibrations, not measurements of any real network
NOISE_PRESETS = {
    "clean": NoiseConfig(),
    "nominal": NoiseConfig(pixel_sigma=2.0, dropout_prob=0.05, false_positive_rate=0.1, outlier_fraction=0.1),
    "harsh": NoiseConfig(pixel_sigma=4.0, dropout_prob=0.2, false_positive_rate=0.5, outlier_fraction=0.2),
}


def load_noise(source: str | Path | dict | NoiseConfig, seed: int | None = None) -> NoiseConfig:
    if isinstance(source, NoiseConfig):
        cfg = source
    elif isinstance(source, dict):
        cfg = NoiseConfig(**source)
    elif str(source) in NOISE_PRESETS:
        cfg = NOISE_PRESETS[str(source)]
    else:
        path = Path(source)
        if path.suffix != ".json" and not path.exists():
            raise ValueError(f"unknown noise preset {source!r}")
        cfg = NoiseConfig(**json.loads(path.read_text()))
    return cfg if seed is None else replace(cfg, seed=seed)


@dataclass(frozen=True)
class MapConfig:
    """Belief-map grid placed over the image: ``pixel = offset + scale * grid``."""

    width: int = 50
    height: int = 50
    scale: float = 8.0
    offset: tuple[float, float] = (120.0, 40.0)

    def to_grid(self, pixels: np.ndarray) -> np.ndarray:
        return (np.asarray(pixels, dtype=float) - np.asarray(self.offset)) / self.scale

    def to_image(self, grid: np.ndarray) -> np.ndarray:
        return np.asarray(self.offset) + self.scale * np.asarray(grid, dtype=float)


OBJECT_MAP = MapConfig()
ROBOT_MAP = MapConfig(width=100, height=100, scale=4.8, offset=(80.0, 0.0))


@dataclass(frozen=True)
class ObjectPlacement:
    model: ObjectModel
    pose: RigidTransform  # robot-from-object


@dataclass(frozen=True)
class SceneConfig:
    intrinsics: CameraIntrinsics
    camera_pose: RigidTransform  # robot-from-camera
    objects: tuple[ObjectPlacement, ...]
    joint_angles: tuple[float, ...]
    robot: RobotKeypointModel = field(default_factory=default_robot, compare=False)

    def cam_robot(self) -> RigidTransform:
        """Robot pose in the camera frame."""
        return invert(self.camera_pose)

    def cam_object(self, index: int = 0) -> RigidTransform:
        return compose(self.cam_robot(), self.objects[index].pose)

    def robot_keypoints(self) -> np.ndarray:
        return self.robot.keypoints(self.joint_angles)

    def envelope_violations(self) -> list[str]:
        x, y, z = self.camera_pose.translation
        out = []
        dist = math.hypot(x, y)
        if not ENVELOPE_DISTANCE[0] <= dist <= ENVELOPE_DISTANCE[1]:
            out.append(f"camera distance {dist:.3f} m outside {ENVELOPE_DISTANCE}")
        if abs(math.atan2(y, x)) > ENVELOPE_AZIMUTH:
            out.append(f"camera azimuth {math.degrees(math.atan2(y, x)):.1f} deg outside +/-45")
        if not ENVELOPE_HEIGHT[0] <= z <= ENVELOPE_HEIGHT[1]:
            out.append(f"camera height {z:.3f} m outside {ENVELOPE_HEIGHT}")
        return out

    def to_dict(self) -> dict:
        return {
            "intrinsics": self.intrinsics.to_dict(),
            "camera_pose": self.camera_pose.to_dict(),
            "objects": [{"model": o.model.to_dict(), "pose": o.pose.to_dict()} for o in self.objects],
            "joint_angles": list(self.joint_angles),
        }

    @classmethod
    def from_dict(cls, d: dict, robot: RobotKeypointModel | None = None) -> SceneConfig:
        robot = robot or default_robot()
        intr = CameraIntrinsics.from_dict(d["intrinsics"]) if "intrinsics" in d else CameraIntrinsics()
        objs = tuple(ObjectPlacement(load_object(o["model"]), RigidTransform.from_dict(o["pose"])) for o in d.get("objects", []))
        angles = tuple(map(float, d.get("joint_angles", robot.nominal_joint_angles)))
        return cls(intr, RigidTransform.from_dict(d["camera_pose"]), objs, angles, robot)


def load_scene(path: str | Path, robot: RobotKeypointModel | None = None) -> SceneConfig:
    return SceneConfig.from_dict(json.loads(Path(path).read_text()), robot)


def camera_at(distance: float, azimuth: float = 0.0, height: float = CAMERA_HEIGHT,
              target: Sequence[float] = LOOK_TARGET) -> RigidTransform:
    """Robot-from-camera pose at a horizontal distance/azimuth from the robot origin."""
    eye = (distance * math.cos(azimuth), distance * math.sin(azimuth), height)
    return look_at(eye, target)


def place_object(model: ObjectModel, position: Sequence[float], yaw: float) -> ObjectPlacement:
    """Upright object whose base rests at ``position`` (z is the bottom face)."""
    x, y, z = position
    return ObjectPlacement(model, RigidTransform(yaw_rotation(yaw), (float(x), float(y), float(z) + 0.5 * model.dimensions[2])))


def workspace_corners(center: Sequence[float] = WORKSPACE_CENTER, size: Sequence[float] = WORKSPACE_SIZE) -> list[tuple[float, float, float]]:
    cx, cy, cz = center
    hx, hy = 0.5 * size[0], 0.5 * size[1]
    return [(cx + sx * hx, cy + sy * hy, cz) for sx in (-1, 1) for sy in (-1, 1)]


def make_scene(model: ObjectModel, position: Sequence[float], yaw: float, camera_pose: RigidTransform,
               robot: RobotKeypointModel | None = None, intrinsics: CameraIntrinsics | None = None,
               joint_angles: Sequence[float] | None = None) -> SceneConfig:
    robot = robot or default_robot()
    angles = tuple(joint_angles) if joint_angles is not None else robot.nominal_joint_angles
    return SceneConfig(intrinsics or CameraIntrinsics(), camera_pose, (place_object(model, position, yaw),), angles, robot)


def visible_counts(scene: SceneConfig, index: int = 0) -> tuple[int, int]:
    """(object keypoints, robot keypoints) projecting inside the image."""
    from .perception import _in_bounds, _project_all

    k = scene.intrinsics
    uv, front = _project_all(k, scene.cam_object(index), scene.objects[index].model.keypoints)
    n_obj = int((front & _in_bounds(k, uv)).sum())
    uv, front = _project_all(k, scene.cam_robot(), scene.robot_keypoints())
    return n_obj, int((front & _in_bounds(k, uv)).sum())


def random_scene(rng: np.random.Generator, model: ObjectModel, robot: RobotKeypointModel | None = None,
                 intrinsics: CameraIntrinsics | None = None, min_visible: int = 6) -> SceneConfig:
    """A random in-envelope scene: camera 1-2 m away within +/-45 deg azimuth,
    object anywhere in the workspace box with random yaw.

    Draws repeat until at least ``min_visible`` object and robot keypoints
    fall inside the image, mirroring an operator who keeps both in view.
    """
    for _ in range(1000):
        d = rng.uniform(*ENVELOPE_DISTANCE)
        az = rng.uniform(-ENVELOPE_AZIMUTH, ENVELOPE_AZIMUTH)
        h = rng.uniform(0.3, 0.5)
        target = np.asarray(LOOK_TARGET) + rng.uniform(-0.05, 0.05, size=3)
        cam = camera_at(d, az, h, target)
        pos = np.asarray(WORKSPACE_CENTER) + rng.uniform(-0.5, 0.5, size=3) * np.asarray(WORKSPACE_SIZE)
        yaw = rng.uniform(-math.pi, math.pi)
        scene = make_scene(model, pos, yaw, cam, robot, intrinsics)
        if min(visible_counts(scene)) >= min_visible:
            return scene
    raise RuntimeError("could not draw a scene with both robot and object in view")
