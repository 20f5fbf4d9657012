"""Object and robot keypoint models, loadable from JSON."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import JointLimitViolation
from ..se3 import RigidTransform, UnitQuaternion

SHAPES = ("cuboid", "cylinder", "bottle")


@dataclass(frozen=True)
class ObjectModel:
    """Bounding cuboid of an object; ``dimensions`` are (x, y, z) extents in
    meters with z up when the object stands upright."""

    name: str
    dimensions: tuple[float, float, float]
    shape: str = "cuboid"

    def __post_init__(self):
        if len(self.dimensions) != 3 or min(self.dimensions) <= 0:
            raise ValueError(f"{self.name}: dimensions must be three positive lengths")
        if self.shape not in SHAPES:
            raise ValueError(f"{self.name}: unknown shape {self.shape!r}")

    @property
    def vertices(self) -> np.ndarray:
        half = 0.5 * np.asarray(self.dimensions)
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        return signs * half

    @property
    def keypoints(self) -> np.ndarray:
        """The 8 cuboid corners followed by the centroid (origin)."""
        return np.vstack((self.vertices, np.zeros(3)))

    @property
    def max_dimension(self) -> float:
        return max(self.dimensions)

    def to_dict(self) -> dict:
        return {"name": self.name, "dimensions": list(self.dimensions), "shape": self.shape}

    @classmethod
    def from_dict(cls, d: dict) -> ObjectModel:
        return cls(str(d["name"]), tuple(float(v) for v in d["dimensions"]), d.get("shape", "cuboid"))


@lru_cache(maxsize=None)
def object_catalog() -> dict[str, ObjectModel]:
    text = resources.files("indirect_pose.data").joinpath("objects.json").read_text()
    return {d["name"]: ObjectModel.from_dict(d) for d in json.loads(text)["objects"]}


def load_object(source: str | Path | dict) -> ObjectModel:
    """Resolve a catalog name, a JSON file path, or an already-parsed dict."""
    if isinstance(source, dict):
        return ObjectModel.from_dict(source)
    catalog = object_catalog()
    if str(source) in catalog:
        return catalog[str(source)]
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        return ObjectModel.from_dict(json.loads(path.read_text()))
    raise ValueError(f"unknown object {source!r}")


@dataclass(frozen=True)
class Joint:
    name: str
    offset: tuple[float, float, float]  # from previous joint frame, meters
    axis: tuple[float, float, float]
    lower: float
    upper: float


@dataclass(frozen=True)
class KinematicChain:
    name: str
    base: RigidTransform  # robot-from-chain-base
    joints: tuple[Joint, ...]

    def check_limits(self, angles: Sequence[float]) -> None:
        if len(angles) != len(self.joints):
            raise ValueError(f"{self.name}: expected {len(self.joints)} joint angles, got {len(angles)}")
        for j, a in zip(self.joints, angles):
            if not j.lower <= a <= j.upper:
                raise JointLimitViolation(f"{self.name}/{j.name}: {a:.4f} outside [{j.lower}, {j.upper}]")


@dataclass(frozen=True)
class RobotKeypointModel:
    """Fixed torso keypoints plus one keypoint per arm joint."""

    torso: dict[str, tuple[float, float, float]]
    arms: tuple[KinematicChain, ...]
    nominal_joint_angles: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.torso) != 10:
            raise ValueError("robot model needs exactly 10 torso keypoints")
        if len(self.arms) != 2 or any(len(a.joints) != 7 for a in self.arms):
            raise ValueError("robot model needs two 7-joint arms")

    @property
    def num_keypoints(self) -> int:
        return len(self.torso) + sum(len(a.joints) for a in self.arms)

    @property
    def keypoint_names(self) -> list[str]:
        names = list(self.torso)
        for arm in self.arms:
            names += [f"{arm.name}_{j.name}" for j in arm.joints]
        return names

    def keypoints(self, joint_angles: Sequence[float]) -> np.ndarray:
        """(24, 3) robot-frame keypoints: torso, then each arm's joints."""
        from .kinematics import forward_kinematics

        joint_angles = list(joint_angles)
        pts = [np.array(list(self.torso.values()), dtype=float)]
        i = 0
        for arm in self.arms:
            n = len(arm.joints)
            pts.append(forward_kinematics(arm, joint_angles[i : i + n]))
            i += n
        if i != len(joint_angles):
            raise ValueError(f"expected {i} joint angles, got {len(joint_angles)}")
        return np.vstack(pts)

    @classmethod
    def from_dict(cls, d: dict) -> RobotKeypointModel:
        arms = []
        for a in d["arms"]:
            joints = tuple(
                Joint(j["name"], tuple(map(float, j["offset"])), tuple(map(float, j["axis"])), *map(float, j["limits"]))
                for j in a["joints"]
            )
            arms.append(KinematicChain(a["name"], RigidTransform.from_dict(a["base"]), joints))
        torso = {k: tuple(map(float, v)) for k, v in d["torso_keypoints"].items()}
        return cls(torso, tuple(arms), tuple(map(float, d.get("nominal_joint_angles", ()))))

    def to_dict(self) -> dict:
        return {
            "torso_keypoints": {k: list(v) for k, v in self.torso.items()},
            "arms": [
                {
                    "name": a.name,
                    "base": a.base.to_dict(),
                    "joints": [
                        {"name": j.name, "offset": list(j.offset), "axis": list(j.axis), "limits": [j.lower, j.upper]}
                        for j in a.joints
                    ],
                }
                for a in self.arms
            ],
            "nominal_joint_angles": list(self.nominal_joint_angles),
        }


@lru_cache(maxsize=None)
def default_robot() -> RobotKeypointModel:
    text = resources.files("indirect_pose.data").joinpath("robot.json").read_text()
    return RobotKeypointModel.from_dict(json.loads(text))


def load_robot(source: str | Path | dict | None) -> RobotKeypointModel:
    if source is None:
        return default_robot()
    if isinstance(source, dict):
        return RobotKeypointModel.from_dict(source)
    return RobotKeypointModel.from_dict(json.loads(Path(source).read_text()))


def yaw_rotation(yaw: float) -> UnitQuaternion:
    return UnitQuaternion.from_axis_angle((0.0, 0.0, 1.0), yaw)
