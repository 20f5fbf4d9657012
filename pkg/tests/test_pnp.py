import math

import numpy as np
import pytest

from helpers import camera_facing_pose
from indirect_pose.errors import DegenerateConfiguration, DivergedBehindCamera, NotEnoughPoints
from indirect_pose.pnp import (
    Correspondence,
    RefineConfig,
    levenberg_marquardt,
    perturb,
    refine_lm,
    reprojection_jacobian,
    reprojection_residuals,
    reprojection_rmse,
    solve_dlt,
    solve_pnp,
)
from indirect_pose.se3 import CameraIntrinsics, RigidTransform, UnitQuaternion, compose, geodesic_angle, invert
from indirect_pose.sim.models import default_robot, object_catalog
from indirect_pose.sim.scene import camera_at
from oracles import pinhole, pose_matrix

K = CameraIntrinsics()
CUBOID = object_catalog()["sugar_box"].keypoints


def make_corrs(pose, pts, noise=0.0, rng=None):
    M = pose_matrix(pose)
    out = []
    for p in pts:
        pc = M @ np.append(p, 1.0)
        u, v = pinhole(K.fx, K.fy, K.cx, K.cy, pc[:3])
        if noise:
            u, v = u + noise * rng.standard_normal(), v + noise * rng.standard_normal()
        out.append(Correspondence(tuple(p), (u, v)))
    return out


def pose_err(a, b):
    return math.dist(a.translation, b.translation), geodesic_angle(a.rotation, b.rotation)


def jacobian_fd(pose, X, uv, h=1e-6):
    J = np.zeros((2 * len(X), 6))
    for j in range(6):
        d = np.zeros(6)
        d[j] = h
        J[:, j] = (reprojection_residuals(perturb(pose, d), X, uv, K) - reprojection_residuals(perturb(pose, -d), X, uv, K)) / (2 * h)
    return J


def test_correspondence_rejects_negative_weight():
    with pytest.raises(ValueError):
        Correspondence((0, 0, 0), (1, 1), -0.1)


# ---------------------------------------------------------------------------- DLT


def test_dlt_noiseless_recovery(rng):
    for _ in range(50):
        truth = camera_facing_pose(rng)
        est = solve_dlt(make_corrs(truth, CUBOID), K)
        dt, dr = pose_err(est, truth)
        assert dt < 1e-6 and dr < 1e-6


def test_dlt_needs_six_points(rng):
    corrs = make_corrs(camera_facing_pose(rng), CUBOID[:5])
    with pytest.raises(NotEnoughPoints):
        solve_dlt(corrs, K)


def test_dlt_collinear_is_degenerate(rng):
    pts = np.outer(np.linspace(-0.1, 0.1, 8), [1.0, 0.5, -0.2])
    with pytest.raises(DegenerateConfiguration):
        solve_dlt(make_corrs(camera_facing_pose(rng), pts), K)


def test_dlt_coincident_points_degenerate():
    corrs = [Correspondence((0.1, 0.1, 0.1), (300.0 + i, 200.0)) for i in range(8)]
    with pytest.raises(DegenerateConfiguration):
        solve_dlt(corrs, K)


def test_dlt_centroid_in_front_under_noise(rng):
    """Small distant targets: the sign of the linear solution still puts the model ahead."""
    for _ in range(200):
        truth = camera_facing_pose(rng, depth=1.6)
        est = solve_dlt(make_corrs(truth, CUBOID, noise=2.0, rng=rng), K)
        assert est.translation[2] > 0


# ----------------------------------------------------------------------------- LM


def test_lm_at_truth_converges_immediately(rng):
    truth = camera_facing_pose(rng)
    sol = refine_lm(truth, make_corrs(truth, CUBOID), K)
    assert sol.converged and sol.iterations <= 2
    assert sol.reprojection_rmse < 1e-9


def test_lm_recovers_from_perturbation(rng):
    for _ in range(30):
        truth = camera_facing_pose(rng)
        axis = rng.standard_normal(3)
        dq = UnitQuaternion.from_axis_angle(axis, math.radians(10))
        dt = rng.standard_normal(3)
        dt *= 0.05 / np.linalg.norm(dt)
        start = RigidTransform(dq * truth.rotation, tuple(np.add(truth.translation, dt)))
        sol = refine_lm(start, make_corrs(truth, CUBOID), K)
        e_t, e_r = pose_err(sol.pose, truth)
        assert e_t < 1e-6 and e_r < 1e-6


def test_lm_does_not_worsen_dlt_under_noise(rng):
    for _ in range(50):
        truth = camera_facing_pose(rng, depth=1.1)
        corrs = make_corrs(truth, CUBOID, noise=2.0, rng=rng)
        init = solve_dlt(corrs, K)
        sol = refine_lm(init, corrs, K)
        assert sol.reprojection_rmse <= reprojection_rmse(init, corrs, K) + 1e-12


def test_lm_cost_history_non_increasing(rng):
    for _ in range(30):
        truth = camera_facing_pose(rng)
        corrs = make_corrs(truth, CUBOID, noise=3.0, rng=rng)
        start = perturb(truth, rng.normal(0, 0.05, 6))
        hist = refine_lm(start, corrs, K).cost_history
        assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_lm_minimum_points(rng):
    truth = camera_facing_pose(rng)
    with pytest.raises(NotEnoughPoints):
        refine_lm(truth, make_corrs(truth, CUBOID[:3]), K)
    sol = refine_lm(truth, make_corrs(truth, CUBOID[:4]), K)
    assert sol.reprojection_rmse < 1e-9


def test_lm_initial_behind_camera_raises(rng):
    truth = camera_facing_pose(rng)
    behind = RigidTransform(truth.rotation, (0.0, 0.0, -1.0))
    with pytest.raises(DivergedBehindCamera):
        refine_lm(behind, make_corrs(truth, CUBOID), K)


def test_lm_iteration_budget(rng):
    truth = camera_facing_pose(rng)
    start = perturb(truth, [0.2, -0.1, 0.1, 0.05, 0.02, -0.05])
    sol = refine_lm(start, make_corrs(truth, CUBOID), K, RefineConfig(max_iterations=1))
    assert sol.iterations == 1


def test_jacobian_matches_central_differences(rng):
    worst = 0.0
    for _ in range(100):
        pose = camera_facing_pose(rng)
        X = rng.uniform(-0.1, 0.1, (9, 3))
        uv = rng.uniform(0, 480, (9, 2))
        J = reprojection_jacobian(pose, X, K)
        Jn = jacobian_fd(pose, X, uv)
        col = np.linalg.norm(J - Jn, axis=0) / np.linalg.norm(J, axis=0)
        worst = max(worst, float(col.max()))
    assert worst < 1e-4


def test_weighted_rmse(rng):
    truth = camera_facing_pose(rng)
    corrs = make_corrs(truth, CUBOID)
    shifted = [Correspondence(c.object_point, (c.image_point[0] + 3.0, c.image_point[1]), 2.0 if i == 0 else 0.0)
               for i, c in enumerate(corrs)]
    assert reprojection_rmse(truth, shifted, K) == pytest.approx(3.0, abs=1e-9)


# -------------------------------------------------------------------- full solve


def test_solve_pnp_noiseless_cuboid(rng):
    for _ in range(50):
        truth = camera_facing_pose(rng)
        sol = solve_pnp(make_corrs(truth, CUBOID), K)
        assert pose_err(sol.pose, truth)[0] < 1e-6


def test_solve_pnp_noiseless_robot(rng):
    robot = default_robot()
    pts = robot.keypoints(robot.nominal_joint_angles)
    for _ in range(20):
        cam_from_robot = invert(camera_at(rng.uniform(1.5, 2.5), rng.uniform(-0.7, 0.7), rng.uniform(0.2, 0.6)))
        assert (cam_from_robot.transform_points(pts)[:, 2] > 0).all()
        sol = solve_pnp(make_corrs(cam_from_robot, pts), K)
        assert pose_err(sol.pose, cam_from_robot)[0] < 1e-6


def test_solve_pnp_four_points_rejected(rng):
    with pytest.raises(NotEnoughPoints):
        solve_pnp(make_corrs(camera_facing_pose(rng), CUBOID[:4]), K)


def test_noise_consistency(rng):
    truth = RigidTransform(UnitQuaternion.from_rotvec((0.4, -0.6, 0.2)), (0.05, -0.02, 1.1))
    errs = {}
    for sigma in (1.0, 4.0):
        e = [pose_err(solve_pnp(make_corrs(truth, CUBOID, sigma, rng), K).pose, truth)[0] for _ in range(500)]
        errs[sigma] = np.mean(e)
    assert errs[1.0] < errs[4.0]


def test_gauge_invariance(rng):
    """Moving the model by G and composing the answer with G^-1 leaves the fit unchanged."""
    for _ in range(20):
        truth = camera_facing_pose(rng)
        corrs = make_corrs(truth, CUBOID, noise=1.5, rng=rng)
        sol = solve_pnp(corrs, K)
        G = RigidTransform(UnitQuaternion.from_rotvec(rng.normal(0, 0.5, 3)), tuple(rng.normal(0, 0.2, 3)))
        moved = [Correspondence(G.transform_point(c.object_point), c.image_point) for c in corrs]
        sol_g = solve_pnp(moved, K)
        back = compose(sol_g.pose, G)
        assert reprojection_rmse(back, corrs, K) == pytest.approx(sol.reprojection_rmse, abs=1e-9)


def test_levenberg_marquardt_huber_inf_matches_plain(rng):
    truth = camera_facing_pose(rng)
    corrs = make_corrs(truth, CUBOID, noise=2.0, rng=rng)
    X = np.array([c.object_point for c in corrs])
    uv = np.array([c.image_point for c in corrs])
    start = perturb(truth, [0.05, 0.0, -0.05, 0.01, 0.01, 0.02])
    a = levenberg_marquardt(start, X, uv, np.ones(len(X)), K)
    b = levenberg_marquardt(start, X, uv, np.ones(len(X)), K, huber_delta=math.inf)
    assert a.pose == b.pose and a.iterations == b.iterations
