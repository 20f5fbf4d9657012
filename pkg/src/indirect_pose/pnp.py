"""Perspective-n-point solving: linear DLT initialization followed by
Levenberg-Marquardt refinement of the weighted reprojection error.

The pose is parameterized locally by ``delta = (omega, tau)``:
``R <- exp(omega) R`` and ``t <- t + tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateConfiguration, DivergedBehindCamera, NotEnoughPoints
from .se3 import MIN_DEPTH, CameraIntrinsics, RigidTransform, UnitQuaternion

MIN_DLT_POINTS = 6
MIN_LM_POINTS = 4
DLT_RANK_TOL = 1e-8


@dataclass(frozen=True)
class Correspondence:
    object_point: tuple[float, float, float]
    image_point: tuple[float, float]
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("correspondence weight must be non-negative")


@dataclass(frozen=True)
class RefineConfig:
    max_iterations: int = 100
    step_tol: float = 1e-10
    cost_tol: float = 1e-12
    initial_lambda: float = 1e-3


@dataclass(frozen=True)
class PnPSolution:
    pose: RigidTransform
    reprojection_rmse: float
    iterations: int
    converged: bool
    # mean objective (px^2) after the initial state and every accepted step
    cost_history: tuple[float, ...] = field(default=(), repr=False)


def correspondence_arrays(corrs: Sequence[Correspondence]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(corrs) == 0:
        return np.zeros((0, 3)), np.zeros((0, 2)), np.zeros(0)
    X = np.array([c.object_point for c in corrs], dtype=float)
    uv = np.array([c.image_point for c in corrs], dtype=float)
    w = np.array([c.weight for c in corrs], dtype=float)
    return X, uv, w


def perturb(pose: RigidTransform, delta: Sequence[float]) -> RigidTransform:
    """Apply a local 6-vector update ``(omega, tau)`` to ``pose``."""
    dq = UnitQuaternion.from_rotvec(delta[:3])
    tx, ty, tz = pose.translation
    return RigidTransform(dq * pose.rotation, (tx + float(delta[3]), ty + float(delta[4]), tz + float(delta[5])))


def reprojection_residuals(pose: RigidTransform, X: np.ndarray, uv: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    """Stacked (u, v) residuals, shape (2N,). Points behind the camera give inf."""
    pc = pose.transform_points(X)
    z = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * pc[:, 0] / z + k.cx
        v = k.fy * pc[:, 1] / z + k.cy
    r = np.column_stack((u - uv[:, 0], v - uv[:, 1]))
    r[z <= MIN_DEPTH] = np.inf
    return r.reshape(-1)


def reprojection_jacobian(pose: RigidTransform, X: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    """Analytic d(residuals)/d(omega, tau), shape (2N, 6)."""
    R = pose.rotation_matrix()
    RX = np.asarray(X, dtype=float) @ R.T
    pc = RX + np.asarray(pose.translation)
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    iz = 1.0 / z
    n = len(z)
    # d(pixel)/d(camera point), (N, 2, 3)
    dpi = np.zeros((n, 2, 3))
    dpi[:, 0, 0] = k.fx * iz
    dpi[:, 0, 2] = -k.fx * x * iz * iz
    dpi[:, 1, 1] = k.fy * iz
    dpi[:, 1, 2] = -k.fy * y * iz * iz
    # d(camera point)/d(omega) = -[R X]_x
    a, b, c = RX[:, 0], RX[:, 1], RX[:, 2]
    dp_dw = np.zeros((n, 3, 3))
    dp_dw[:, 0, 1] = c
    dp_dw[:, 0, 2] = -b
    dp_dw[:, 1, 0] = -c
    dp_dw[:, 1, 2] = a
    dp_dw[:, 2, 0] = b
    dp_dw[:, 2, 1] = -a
    J = np.empty((n, 2, 6))
    J[:, :, :3] = dpi @ dp_dw
    J[:, :, 3:] = dpi
    return J.reshape(2 * n, 6)


def _robust_terms(sq: np.ndarray, huber_delta: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Per-point objective value and IRLS weight for squared residual norms."""
    if huber_delta is None or math.isinf(huber_delta):
        return sq, np.ones_like(sq)
    s = np.sqrt(sq)
    inlier = s <= huber_delta
    rho = np.where(inlier, sq, 2.0 * huber_delta * s - huber_delta * huber_delta)
    with np.errstate(divide="ignore"):
        irls = np.where(inlier, 1.0, huber_delta / s)
    return rho, irls


def levenberg_marquardt(
    initial: RigidTransform,
    X: np.ndarray,
    uv: np.ndarray,
    w: np.ndarray,
    k: CameraIntrinsics,
    cfg: RefineConfig = RefineConfig(),
    huber_delta: float | None = None,
) -> PnPSolution:
    """Minimize ``sum w_i rho(|r_i|)`` over the pose.

    ``rho`` is the squared norm, or the Huber function (scaled to match the
    square inside ``huber_delta``) when ``huber_delta`` is given.
    """
    X = np.asarray(X, dtype=float)
    uv = np.asarray(uv, dtype=float)
    w = np.asarray(w, dtype=float)
    wsum = float(w.sum())
    if len(X) < MIN_LM_POINTS or wsum <= 0.0:
        raise NotEnoughPoints(f"need at least {MIN_LM_POINTS} weighted correspondences, got {len(X)}")
    centroid = X.mean(axis=0)
    if initial.transform_point(centroid)[2] <= 0.0:
        raise DivergedBehindCamera("initial pose places the model behind the camera")

    def evaluate(pose):
        r = reprojection_residuals(pose, X, uv, k)
        sq = (r.reshape(-1, 2) ** 2).sum(axis=1)
        rho, irls = _robust_terms(sq, huber_delta)
        return r, sq, float(np.dot(w, rho)), irls

    pose = initial
    r, sq, cost, irls = evaluate(pose)
    if not math.isfinite(cost):
        raise DivergedBehindCamera("initial pose places model points behind the camera")
    history = [cost / wsum]
    lam = cfg.initial_lambda
    converged = False
    it = 0
    need_linearize = True
    while it < cfg.max_iterations:
        it += 1
        if need_linearize:
            J = reprojection_jacobian(pose, X, k)
            omega = np.repeat(w * irls, 2)
            JW = J.T * omega
            H = JW @ J
            g = JW @ r
            diag = np.maximum(np.diag(H), 1e-12)
            need_linearize = False
        step = np.linalg.solve(H + lam * np.diag(diag), -g)
        if float(np.linalg.norm(step)) < cfg.step_tol:
            converged = True
            break
        cand = perturb(pose, step)
        c_r, c_sq, c_cost, c_irls = evaluate(cand)
        if math.isfinite(c_cost) and c_cost < cost:
            improvement = (cost - c_cost) / wsum
            pose, r, sq, cost, irls = cand, c_r, c_sq, c_cost, c_irls
            history.append(cost / wsum)
            lam = max(lam / 10.0, 1e-15)
            need_linearize = True
            if improvement < cfg.cost_tol:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e20:
                converged = True
                break
    if pose.transform_point(centroid)[2] <= 0.0:
        raise DivergedBehindCamera("refinement moved the model centroid behind the camera")
    rmse = math.sqrt(float(np.dot(w, sq)) / wsum)
    return PnPSolution(pose, rmse, it, converged, tuple(history))


def _dlt_arrays(X: np.ndarray, uv: np.ndarray, w: np.ndarray, k: CameraIntrinsics) -> RigidTransform:
    used = w > 0
    X, uv, w = X[used], uv[used], w[used]
    n = len(X)
    if n < MIN_DLT_POINTS:
        raise NotEnoughPoints(f"DLT needs at least {MIN_DLT_POINTS} correspondences, got {n}")
    xn = (uv[:, 0] - k.cx) / k.fx
    yn = (uv[:, 1] - k.cy) / k.fy
    # condition the 3D points: zero mean, RMS distance sqrt(3)
    c = X.mean(axis=0)
    spread = math.sqrt(float(((X - c) ** 2).sum(axis=1).mean()) / 3.0)
    if spread == 0.0:
        raise DegenerateConfiguration("all model points coincide")
    Xh = np.column_stack(((X - c) / spread, np.ones(n)))
    A = np.zeros((2 * n, 12))
    A[0::2, 0:4] = Xh
    A[0::2, 8:12] = -xn[:, None] * Xh
    A[1::2, 4:8] = Xh
    A[1::2, 8:12] = -yn[:, None] * Xh
    A *= np.repeat(np.sqrt(w), 2)[:, None]
    _, sv, vt = np.linalg.svd(A)
    if sv[-2] <= DLT_RANK_TOL * sv[0]:
        raise DegenerateConfiguration("DLT design matrix is rank deficient")
    P = vt[-1].reshape(3, 4)
    # cheirality fixes the sign: the conditioned points have zero mean, so
    # P[2, 3] is the centroid depth; det(M) is unreliable for small noisy targets
    if P[2, 3] == 0.0:
        raise DegenerateConfiguration("DLT solution puts the model centroid on the camera plane")
    if P[2, 3] < 0.0:
        P = -P
    M = P[:, :3]
    U, S, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    R = U @ D @ Vt
    scale = float(S.mean())
    t_centroid = P[:, 3] * spread / scale
    return RigidTransform.from_rotation_matrix(R, t_centroid - R @ c)


def solve_dlt(corrs: Sequence[Correspondence], k: CameraIntrinsics) -> RigidTransform:
    """Linear pose estimate: DLT in normalized coordinates, then the
    nearest rotation (SVD, det=+1)."""
    return _dlt_arrays(*correspondence_arrays(corrs), k)


def refine_lm(
    initial: RigidTransform,
    corrs: Sequence[Correspondence],
    k: CameraIntrinsics,
    cfg: RefineConfig = RefineConfig(),
) -> PnPSolution:
    X, uv, w = correspondence_arrays(corrs)
    return levenberg_marquardt(initial, X, uv, w, k, cfg)


def solve_pnp_arrays(
    X: np.ndarray, uv: np.ndarray, w: np.ndarray, k: CameraIntrinsics, cfg: RefineConfig = RefineConfig()
) -> PnPSolution:
    init = _dlt_arrays(np.asarray(X, float), np.asarray(uv, float), np.asarray(w, float), k)
    return levenberg_marquardt(init, X, uv, w, k, cfg)


def solve_pnp(
    corrs: Sequence[Correspondence], k: CameraIntrinsics, cfg: RefineConfig = RefineConfig()
) -> PnPSolution:
    return solve_pnp_arrays(*correspondence_arrays(corrs), k, cfg)


def reprojection_rmse(pose: RigidTransform, corrs: Sequence[Correspondence], k: CameraIntrinsics) -> float:
    X, uv, w = correspondence_arrays(corrs)
    r = reprojection_residuals(pose, X, uv, k).reshape(-1, 2)
    return math.sqrt(float(np.dot(w, (r**2).sum(axis=1))) / float(w.sum()))
