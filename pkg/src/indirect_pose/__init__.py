"""Indirect object pose estimation: object-in-robot pose from one external camera.

The camera sees both the robot and the object; each is localized by PnP on
detected keypoints, and the two camera-frame poses combine into the object
pose in the robot frame.
"""

from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    DivergedBehindCamera,
    JointLimitViolation,
    NotEnoughPoints,
    PoseError,
)
from .se3 import CameraIntrinsics, RigidTransform, UnitQuaternion, compose, invert, object_in_robot_frame

__version__ = "0.1.0"

__all__ = [
    "BehindCamera",
    "CameraIntrinsics",
    "DegenerateConfiguration",
    "DivergedBehindCamera",
    "JointLimitViolation",
    "NotEnoughPoints",
    "PoseError",
    "RigidTransform",
    "UnitQuaternion",
    "compose",
    "invert",
    "object_in_robot_frame",
]
