"""Rigid-transform algebra on unit quaternions, pinhole projection, and
indirect object-to-robot composition.

Conventions:
    - ``T_ab`` maps points from frame b into frame a: ``p_a = R_ab p_b + t_ab``.
    - Quaternions are Hamilton, scalar first, canonicalized to ``w >= 0``.
    - Camera frame: z forward, x right, y down. Units are meters and pixels.

Scalar hot paths (compose/invert) use plain float arithmetic; numpy is used
for matrix conversions and batched point transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BehindCamera

MIN_DEPTH = 1e-6


@dataclass(frozen=True, slots=True)
class UnitQuaternion:
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> UnitQuaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def normalized(cls, w: float, x: float, y: float, z: float) -> UnitQuaternion:
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("cannot normalize a zero quaternion")
        if w < 0.0:
            n = -n
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> UnitQuaternion:
        ax, ay, az = (float(v) for v in axis)
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n == 0.0:
            raise ValueError("rotation axis must be non-zero")
        s = math.sin(0.5 * angle) / n
        return cls.normalized(math.cos(0.5 * angle), ax * s, ay * s, az * s)

    @classmethod
    def from_rotvec(cls, v: Sequence[float]) -> UnitQuaternion:
        vx, vy, vz = (float(c) for c in v)
        angle = math.sqrt(vx * vx + vy * vy + vz * vz)
        if angle < 1e-12:
            # second-order expansion keeps tiny steps exact to rounding
            return cls.normalized(1.0 - angle * angle / 8.0, 0.5 * vx, 0.5 * vy, 0.5 * vz)
        s = math.sin(0.5 * angle) / angle
        return cls.normalized(math.cos(0.5 * angle), vx * s, vy * s, vz * s)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> UnitQuaternion:
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        if tr > 0.0:
            s = 2.0 * math.sqrt(tr + 1.0)
            return cls.normalized(
                0.25 * s,
                (m[2, 1] - m[1, 2]) / s,
                (m[0, 2] - m[2, 0]) / s,
                (m[1, 0] - m[0, 1]) / s,
            )
        if m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            return cls.normalized(
                (m[2, 1] - m[1, 2]) / s,
                0.25 * s,
                (m[0, 1] + m[1, 0]) / s,
                (m[0, 2] + m[2, 0]) / s,
            )
        if m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            return cls.normalized(
                (m[0, 2] - m[2, 0]) / s,
                (m[0, 1] + m[1, 0]) / s,
                0.25 * s,
                (m[1, 2] + m[2, 1]) / s,
            )
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        return cls.normalized(
            (m[1, 0] - m[0, 1]) / s,
            (m[0, 2] + m[2, 0]) / s,
            (m[1, 2] + m[2, 1]) / s,
            0.25 * s,
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: UnitQuaternion) -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def conjugate(self) -> UnitQuaternion:
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: UnitQuaternion) -> UnitQuaternion:
        aw, ax, ay, az = self.w, self.x, self.y, self.z
        bw, bx, by, bz = other.w, other.x, other.y, other.z
        return UnitQuaternion.normalized(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )

    def rotate(self, v: Sequence[float]) -> tuple[float, float, float]:
        vx, vy, vz = v
        qw, qx, qy, qz = self.w, self.x, self.y, self.z
        tx = 2.0 * (qy * vz - qz * vy)
        ty = 2.0 * (qz * vx - qx * vz)
        tz = 2.0 * (qx * vy - qy * vx)
        return (
            vx + qw * tx + (qy * tz - qz * ty),
            vy + qw * ty + (qz * tx - qx * tz),
            vz + qw * tz + (qx * ty - qy * tx),
        )

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotvec(self) -> np.ndarray:
        v = np.array([self.x, self.y, self.z])
        s = float(np.linalg.norm(v))
        if s < 1e-12:
            return 2.0 * v
        return v * (2.0 * math.atan2(s, self.w) / s)


@dataclass(frozen=True, slots=True)
class RigidTransform:
    rotation: UnitQuaternion
    translation: tuple[float, float, float]

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(UnitQuaternion.identity(), (0.0, 0.0, 0.0))

    @classmethod
    def from_parts(cls, rotation: UnitQuaternion, translation: Sequence[float]) -> RigidTransform:
        tx, ty, tz = (float(v) for v in translation)
        return cls(rotation, (tx, ty, tz))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> RigidTransform:
        m = np.asarray(m, dtype=float)
        return cls.from_parts(UnitQuaternion.from_matrix(m[:3, :3]), m[:3, 3])

    @classmethod
    def from_rotation_matrix(cls, r: np.ndarray, t: Sequence[float]) -> RigidTransform:
        return cls.from_parts(UnitQuaternion.from_matrix(r), t)

    def rotation_matrix(self) -> np.ndarray:
        return self.rotation.matrix()

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.matrix()
        m[:3, 3] = self.translation
        return m

    def transform_point(self, p: Sequence[float]) -> tuple[float, float, float]:
        rx, ry, rz = self.rotation.rotate(p)
        tx, ty, tz = self.translation
        return (rx + tx, ry + ty, rz + tz)

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an (N, 3) array of points."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return pts @ self.rotation.matrix().T + np.asarray(self.translation)

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return compose(self, other)

    def to_dict(self) -> dict:
        return {
            "rotation": list(self.rotation.as_tuple()),
            "translation": list(self.translation),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RigidTransform:
        """Accepts ``rotation`` as ``[w, x, y, z]`` or ``{"w":..,...}``."""
        rot = d["rotation"]
        if isinstance(rot, dict):
            rot = [rot["w"], rot["x"], rot["y"], rot["z"]]
        if len(rot) != 4 or len(d["translation"]) != 3:
            raise ValueError("pose needs a 4-element rotation and 3-element translation")
        return cls.from_parts(UnitQuaternion.normalized(*(float(v) for v in rot)), d["translation"])


@dataclass(frozen=True, slots=True)
class CameraIntrinsics:
    fx: float = 600.0
    fy: float = 600.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def contains(self, u: float, v: float) -> bool:
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CameraIntrinsics:
        return cls(
            fx=float(d["fx"]), fy=float(d["fy"]), cx=float(d["cx"]), cy=float(d["cy"]),
            width=int(d["width"]), height=int(d["height"]),
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Return ``a * b`` (apply ``b`` first)."""
    rx, ry, rz = a.rotation.rotate(b.translation)
    ax, ay, az = a.translation
    return RigidTransform(a.rotation * b.rotation, (rx + ax, ry + ay, rz + az))


def invert(t: RigidTransform) -> RigidTransform:
    q = t.rotation
    qi = UnitQuaternion.normalized(q.w, -q.x, -q.y, -q.z)
    rx, ry, rz = qi.rotate(t.translation)
    return RigidTransform(qi, (-rx, -ry, -rz))


def object_in_robot_frame(cam_robot: RigidTransform, cam_object: RigidTransform) -> RigidTransform:
    """Pose of the object in the robot base frame: ``inv(T_cam_robot) * T_cam_object``."""
    return compose(invert(cam_robot), cam_object)


def project(k: CameraIntrinsics, cam_pose_of_point_frame: RigidTransform, p: Sequence[float]) -> tuple[float, float]:
    x, y, z = cam_pose_of_point_frame.transform_point(p)
    if z <= MIN_DEPTH:
        raise BehindCamera(f"point depth {z:.3g} m is not in front of the camera")
    return (k.fx * x / z + k.cx, k.fy * y / z + k.cy)


def project_points(k: CameraIntrinsics, cam_pose: RigidTransform, pts: np.ndarray) -> np.ndarray:
    """Vectorized ``project`` for an (N, 3) array; returns (N, 2) pixels."""
    pc = cam_pose.transform_points(pts)
    if np.any(pc[:, 2] <= MIN_DEPTH):
        raise BehindCamera("at least one point is not in front of the camera")
    return np.column_stack((k.fx * pc[:, 0] / pc[:, 2] + k.cx, k.fy * pc[:, 1] / pc[:, 2] + k.cy))


def backproject(k: CameraIntrinsics, pixel: Sequence[float], depth: float) -> tuple[float, float, float]:
    u, v = pixel
    return ((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, float(depth))


def geodesic_angle(a: UnitQuaternion, b: UnitQuaternion) -> float:
    """Rotation angle of ``a^-1 b`` in [0, pi]; equals ``2 acos(|a.b|)``."""
    # atan2 form keeps full precision near zero where acos loses ~1e-8
    w = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z
    x = a.w * b.x - a.x * b.w - a.y * b.z + a.z * b.y
    y = a.w * b.y + a.x * b.z - a.y * b.w - a.z * b.x
    z = a.w * b.z - a.x * b.y + a.y * b.x - a.z * b.w
    return 2.0 * math.atan2(math.sqrt(x * x + y * y + z * z), abs(w))


def slerp(a: UnitQuaternion, b: UnitQuaternion, t: float) -> UnitQuaternion:
    if not 0.0 <= t <= 1.0:
        raise ValueError("slerp fraction must lie in [0, 1]")
    if a == b or t == 0.0:
        return a
    d = a.dot(b)
    bw, bx, by, bz = b.w, b.x, b.y, b.z
    if d < 0.0:
        d, bw, bx, by, bz = -d, -bw, -bx, -by, -bz
    if t == 1.0:
        return UnitQuaternion.normalized(bw, bx, by, bz)
    if d > 1.0 - 1e-12:
        # nearly parallel: linear blend is accurate and avoids 0/0
        return UnitQuaternion.normalized(
            a.w + t * (bw - a.w), a.x + t * (bx - a.x), a.y + t * (by - a.y), a.z + t * (bz - a.z)
        )
    theta = math.acos(d)
    s = math.sin(theta)
    ka = math.sin((1.0 - t) * theta) / s
    kb = math.sin(t * theta) / s
    return UnitQuaternion.normalized(
        ka * a.w + kb * bw, ka * a.x + kb * bx, ka * a.y + kb * by, ka * a.z + kb * bz
    )


def look_at(eye: Sequence[float], target: Sequence[float], up: Sequence[float] = (0.0, 0.0, 1.0)) -> RigidTransform:
    """World-from-camera pose of a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=float)
    z = np.asarray(target, dtype=float) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, np.asarray(up, dtype=float))
    nx = np.linalg.norm(x)
    if nx < 1e-9:
        raise ValueError("viewing direction is parallel to the up vector")
    x /= nx
    y = np.cross(z, x)
    return RigidTransform.from_rotation_matrix(np.column_stack((x, y, z)), eye)


def skew(v: Sequence[float]) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_error(a: RigidTransform, b: RigidTransform) -> float:
    return geodesic_angle(a.rotation, b.rotation)


def translation_error(a: RigidTransform, b: RigidTransform) -> float:
    return math.dist(a.translation, b.translation)
