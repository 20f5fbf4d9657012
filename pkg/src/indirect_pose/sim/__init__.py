"""Synthetic perception: scenes, models, and simulated network outputs."""

from .kinematics import forward_kinematics
from .models import ObjectModel, RobotKeypointModel, default_robot, load_object, load_robot, object_catalog
from .perception import observe_dense, observe_keypoints, render_belief_stacks, render_robot_beliefs
from .scene import NOISE_PRESETS, MapConfig, NoiseConfig, SceneConfig, load_noise, load_scene
from .trajectory import CameraBox, camera_trajectory

__all__ = [
    "NOISE_PRESETS",
    "CameraBox",
    "MapConfig",
    "NoiseConfig",
    "ObjectModel",
    "RobotKeypointModel",
    "SceneConfig",
    "camera_trajectory",
    "default_robot",
    "forward_kinematics",
    "load_noise",
    "load_object",
    "load_robot",
    "load_scene",
    "object_catalog",
    "observe_dense",
    "observe_keypoints",
    "render_belief_stacks",
    "render_robot_beliefs",
]
