import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import quaternions, random_pose, transforms
from indirect_pose.errors import BehindCamera
from indirect_pose.se3 import (
    CameraIntrinsics,
    RigidTransform,
    UnitQuaternion,
    backproject,
    compose,
    geodesic_angle,
    invert,
    look_at,
    object_in_robot_frame,
    project,
    project_points,
    slerp,
)
from oracles import pinhole, pose_matrix, quat_to_matrix, rotation_angle

K = CameraIntrinsics()


def assert_identity(t: RigidTransform, tol=1e-9):
    assert geodesic_angle(t.rotation, UnitQuaternion.identity()) <= tol
    assert np.linalg.norm(t.translation) <= tol


# --------------------------------------------------------------- quaternion basics


@given(quaternions())
def test_quaternion_unit_and_canonical(q):
    assert abs(q.norm() - 1.0) < 1e-9
    assert q.w >= 0.0


def test_normalized_flips_to_nonnegative_w():
    q = UnitQuaternion.normalized(-1.0, 0.0, 0.0, 0.0)
    assert q == UnitQuaternion.identity()


@given(quaternions(), quaternions())
def test_product_is_unit(a, b):
    p = a * b
    assert abs(p.norm() - 1.0) < 1e-9 and p.w >= 0


@given(quaternions())
def test_matrix_matches_textbook_formula(q):
    assert np.allclose(q.matrix(), quat_to_matrix(q.w, q.x, q.y, q.z), atol=1e-12)


@given(quaternions())
def test_from_matrix_round_trip(q):
    back = UnitQuaternion.from_matrix(q.matrix())
    assert geodesic_angle(q, back) < 1e-7


def test_from_matrix_near_pi_rotation():
    q = UnitQuaternion.from_axis_angle((1.0, 1.0, 0.0), math.pi - 1e-9)
    assert geodesic_angle(q, UnitQuaternion.from_matrix(q.matrix())) < 1e-7


# ------------------------------------------------------------------- composition


def test_compose_identity_left():
    t = random_pose(np.random.default_rng(1))
    assert compose(RigidTransform.identity(), t).matrix() == pytest.approx(t.matrix(), abs=1e-15)


@given(transforms())
def test_compose_with_inverse_is_identity(t):
    assert_identity(compose(t, invert(t)), tol=1e-9 * max(1.0, np.linalg.norm(t.translation)))


def test_compose_matches_matrix_oracle(rng):
    for _ in range(200):
        a, b = random_pose(rng), random_pose(rng)
        assert np.allclose(pose_matrix(compose(a, b)), pose_matrix(a) @ pose_matrix(b), atol=1e-12, rtol=0)


def test_invert_examples():
    assert_identity(invert(RigidTransform.identity()), tol=0.0)
    t = invert(RigidTransform(UnitQuaternion.identity(), (0.0, 0.0, 1.0)))
    assert t.translation == (0.0, 0.0, -1.0)
    assert t.rotation == UnitQuaternion.identity()


def test_invert_matches_matrix_oracle(rng):
    for _ in range(200):
        t = random_pose(rng)
        assert np.allclose(pose_matrix(invert(t)), np.linalg.inv(pose_matrix(t)), atol=1e-12, rtol=0)


@given(transforms(), transforms(), transforms())
def test_associativity(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert geodesic_angle(left.rotation, right.rotation) < 1e-9
    assert np.allclose(left.translation, right.translation, atol=1e-10 * 100)


# ---------------------------------------------------------------------- object in robot frame


def test_object_in_robot_frame_examples(rng):
    t = random_pose(rng)
    assert_identity(object_in_robot_frame(t, t))
    o = random_pose(rng)
    r = object_in_robot_frame(RigidTransform.identity(), o)
    assert geodesic_angle(r.rotation, o.rotation) < 1e-12
    assert np.allclose(r.translation, o.translation, atol=1e-15)


def test_object_in_robot_frame_matches_oracle(rng):
    for _ in range(500):
        a, b = random_pose(rng), random_pose(rng)
        want = np.linalg.inv(pose_matrix(a)) @ pose_matrix(b)
        assert np.allclose(pose_matrix(object_in_robot_frame(a, b)), want, atol=1e-12, rtol=0)


@given(transforms(), transforms(), st.tuples(*[st.floats(-1, 1)] * 3))
def test_frame_consistency(cam_robot, cam_object, p):
    """A point expressed via the robot-frame pose equals the camera round trip."""
    direct = object_in_robot_frame(cam_robot, cam_object).transform_point(p)
    via_camera = invert(cam_robot).transform_point(cam_object.transform_point(p))
    assert np.allclose(direct, via_camera, atol=1e-10 * 50)


# -------------------------------------------------------------------- projection


def test_project_optical_axis():
    assert project(K, RigidTransform.identity(), (0.0, 0.0, 2.0)) == (K.cx, K.cy)


def test_project_inverse_depth():
    u1, v1 = project(K, RigidTransform.identity(), (0.1, -0.05, 1.0))
    u2, v2 = project(K, RigidTransform.identity(), (0.2, -0.10, 2.0))
    u3, v3 = project(K, RigidTransform.identity(), (0.1, -0.05, 2.0))
    assert (u1, v1) == pytest.approx((u2, v2), abs=1e-12)
    assert u3 - K.cx == pytest.approx(0.5 * (u1 - K.cx), abs=1e-12)
    assert v3 - K.cy == pytest.approx(0.5 * (v1 - K.cy), abs=1e-12)


def test_project_matches_scalar_oracle(rng):
    for _ in range(300):
        pose = random_pose(rng, 0.2)
        p = rng.uniform(-0.5, 0.5, 3)
        pc = pose_matrix(pose) @ np.append(p, 1.0)
        if pc[2] <= 0.05:
            continue
        want = pinhole(K.fx, K.fy, K.cx, K.cy, pc[:3])
        assert project(K, pose, p) == pytest.approx(want, abs=1e-10)


def test_project_behind_camera():
    with pytest.raises(BehindCamera):
        project(K, RigidTransform.identity(), (0.0, 0.0, 1e-6))
    with pytest.raises(BehindCamera):
        project(K, RigidTransform.identity(), (0.1, 0.0, -1.0))


def test_project_points_matches_scalar(rng):
    pose = RigidTransform(UnitQuaternion.from_rotvec((0.1, -0.2, 0.05)), (0.0, 0.0, 1.5))
    pts = rng.uniform(-0.2, 0.2, (20, 3))
    arr = project_points(K, pose, pts)
    for p, uv in zip(pts, arr):
        assert tuple(uv) == pytest.approx(project(K, pose, p), abs=1e-12)


@given(st.floats(0, 639.99), st.floats(0, 479.99), st.floats(0.05, 5.0))
def test_backprojection_round_trip(u, v, depth):
    p = backproject(K, (u, v), depth)
    assert p[2] == pytest.approx(depth, abs=1e-12)
    assert project(K, RigidTransform.identity(), p) == pytest.approx((u, v), abs=1e-9)


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        CameraIntrinsics(fx=0.0)
    with pytest.raises(ValueError):
        CameraIntrinsics(cx=640.0)
    k = CameraIntrinsics.from_dict(K.to_dict())
    assert k == K


# ------------------------------------------------------------ slerp and geodesic


def test_slerp_endpoints(rng):
    a, b = random_pose(rng).rotation, random_pose(rng).rotation
    assert slerp(a, b, 0.0) == a
    assert geodesic_angle(slerp(a, b, 1.0), b) < 1e-12


def test_slerp_half_of_right_angle():
    a = UnitQuaternion.identity()
    b = UnitQuaternion.from_axis_angle((0, 0, 1), math.pi / 2)
    mid = slerp(a, b, 0.5)
    assert geodesic_angle(a, mid) == pytest.approx(math.pi / 4, abs=1e-12)
    assert geodesic_angle(mid, UnitQuaternion.from_axis_angle((0, 0, 1), math.pi / 4)) < 1e-12


@given(quaternions(), quaternions(), st.floats(0.0, 1.0))
def test_slerp_angle_is_linear_in_t(a, b, t):
    q = slerp(a, b, t)
    assert abs(q.norm() - 1.0) < 1e-9
    assert geodesic_angle(a, q) == pytest.approx(t * geodesic_angle(a, b), abs=1e-9)


def test_slerp_takes_short_arc():
    a = UnitQuaternion.identity()
    b = UnitQuaternion(-math.cos(0.1), 0.0, 0.0, -math.sin(0.1))  # same rotation as +0.2 rad, far hemisphere
    assert geodesic_angle(a, slerp(a, b, 0.5)) == pytest.approx(0.1, abs=1e-12)


def test_slerp_rejects_out_of_range():
    with pytest.raises(ValueError):
        slerp(UnitQuaternion.identity(), UnitQuaternion.identity(), 1.5)


def test_geodesic_examples(rng):
    q = random_pose(rng).rotation
    assert geodesic_angle(q, q) == pytest.approx(0.0, abs=1e-15)
    neg = UnitQuaternion(-q.w, -q.x, -q.y, -q.z)
    assert geodesic_angle(q, neg) == pytest.approx(0.0, abs=1e-12)
    z90 = UnitQuaternion.from_axis_angle((0, 0, 1), math.pi / 2)
    assert geodesic_angle(z90, UnitQuaternion.identity()) == pytest.approx(math.pi / 2, abs=1e-12)


@given(quaternions(), quaternions())
def test_geodesic_matches_matrix_angle(a, b):
    want = rotation_angle(a.matrix().T @ b.matrix())
    assert 0.0 <= geodesic_angle(a, b) <= math.pi
    assert geodesic_angle(a, b) == pytest.approx(want, abs=1e-6)


def test_geodesic_precise_for_tiny_angles():
    q = UnitQuaternion.from_axis_angle((0.3, -0.2, 0.9), 1e-10)
    assert geodesic_angle(UnitQuaternion.identity(), q) == pytest.approx(1e-10, rel=1e-6)


# ------------------------------------------------------------------ misc helpers


def test_look_at_points_optical_axis_at_target():
    eye, target = (1.5, 0.2, 0.4), (0.3, -0.1, 0.1)
    world_from_cam = look_at(eye, target)
    cam_from_world = invert(world_from_cam)
    u, v = project(K, cam_from_world, target)
    assert (u, v) == pytest.approx((K.cx, K.cy), abs=1e-9)
    # image "down" (camera +y) points toward world -z
    assert world_from_cam.rotation.rotate((0.0, 1.0, 0.0))[2] < 0


def test_dict_round_trip(rng):
    t = random_pose(rng)
    back = RigidTransform.from_dict(t.to_dict())
    assert back.translation == t.translation
    assert back.rotation == t.rotation


def test_from_dict_accepts_named_rotation():
    d = {"rotation": {"w": 1.0, "x": 0.0, "y": 0.0, "z": 0.0}, "translation": [1, 2, 3]}
    assert RigidTransform.from_dict(d).translation == (1.0, 2.0, 3.0)
