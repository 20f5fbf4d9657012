"""Desk-scale versions of the evaluation experiments, run against the simulator.

Every trial draws its noise from streams keyed by (experiment code, cell,
trial, frame), so a report depends only on its config and the noise seed,
never on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..filtering import DEFAULT_ALPHA
from ..se3 import CameraIntrinsics, RigidTransform
from ..sim.models import ObjectModel, RobotKeypointModel, object_catalog
from ..sim.perception import noise_rng
from ..sim.scene import (
    ENVELOPE_DISTANCE,
    NOISE_PRESETS,
    WORKSPACE_CENTER,
    WORKSPACE_SIZE,
    NoiseConfig,
    SceneConfig,
    camera_at,
    make_scene,
    workspace_corners,
)
from ..sim.trajectory import CameraBox, camera_trajectory
from .metrics import ecdf, fraction_within, mean_std
from .pipeline import FrameEstimate, PipelineConfig, StreamFilter, estimate_frame
from .results import ErrorRecord

DEFAULT_DISTANCES = tuple(round(0.92 + 0.10 * i, 2) for i in range(1, 8))
ORIENTATION_DISTANCE = 1.12
BAXTER_TOLERANCE = 0.02
GRASP_OBJECTS = ("cracker_box", "sugar_box", "soup_can", "mustard", "meat_can")

# first stream key per experiment, so no two experiments share noise draws
_DISTANCE, _ORIENTATION, _MOTION, _GRASP = 11, 12, 13, 14
_PLACEMENT_STREAM = 7


def _default_object() -> ObjectModel:
    return object_catalog()["sugar_box"]


@dataclass(frozen=True)
class TrialOptions:
    """Settings shared by every experiment."""

    noise: NoiseConfig = NOISE_PRESETS["nominal"]
    pipeline: PipelineConfig = PipelineConfig()
    filter_alpha: Optional[float] = None
    filter_mode: str = "inputs"
    frames_per_trial: int = 30  # only used when filtering a static scene
    robot: Optional[RobotKeypointModel] = None
    intrinsics: CameraIntrinsics = CameraIntrinsics()
    joint_angles: Optional[tuple[float, ...]] = None  # default: the robot's nominal pose

    def __post_init__(self):
        if self.filter_alpha is not None and not 0.0 < self.filter_alpha <= 1.0:
            raise ValueError("filter_alpha must lie in (0, 1]")
        if self.frames_per_trial < 1:
            raise ValueError("frames_per_trial must be at least 1")


def _scene(opts: TrialOptions, model: ObjectModel, position, yaw: float, camera: RigidTransform) -> SceneConfig:
    return make_scene(model, position, yaw, camera, opts.robot, opts.intrinsics, opts.joint_angles)


def _static_trial(scene: SceneConfig, opts: TrialOptions, key: tuple[int, ...]) -> tuple[Optional[RigidTransform], FrameEstimate]:
    """Estimate for one static trial: a single frame, or the last filtered
    pose after ``frames_per_trial`` frames when filtering is on."""
    if opts.filter_alpha is None:
        est = estimate_frame(scene, opts.noise, key, opts.pipeline)
        return est.robot_object, est
    filt = StreamFilter(opts.filter_alpha, opts.filter_mode)
    pose = None
    for f in range(opts.frames_per_trial):
        est = estimate_frame(scene, opts.noise, (*key, f), opts.pipeline)
        pose = filt.push(est)
    return pose, est


def _record(experiment: str, trial: int, distance: float, yaw: float, scene: SceneConfig,
            pose: Optional[RigidTransform], est: FrameEstimate, opts: TrialOptions) -> ErrorRecord:
    return ErrorRecord.scored(
        experiment, trial, distance, yaw, pose, scene.objects[0].pose,
        refined=est.refined, filtered=opts.filter_alpha is not None, dropped=est.dropped,
    )


@dataclass(frozen=True)
class SummaryRow:
    """Aggregate lateral error for one sweep cell (distance or yaw)."""

    value: float
    mean: float
    std: float
    solved: int
    dropped: int

    @property
    def total(self) -> int:
        return self.solved + self.dropped


def _summarize(value: float, records: Sequence[ErrorRecord]) -> SummaryRow:
    lat = [r.lateral_err_m for r in records if not math.isnan(r.lateral_err_m)]
    mean, std = mean_std(lat)
    dropped = sum(r.dropped for r in records)
    return SummaryRow(value, mean, std, len(records) - dropped, dropped)


# ---------------------------------------------------------------- distance sweep


@dataclass(frozen=True)
class DistanceSweepConfig:
    distances: tuple[float, ...] = DEFAULT_DISTANCES
    positions: tuple[tuple[float, float, float], ...] = field(default_factory=lambda: tuple(workspace_corners()))
    yaw: float = math.radians(45.0)
    trials: int = 200
    model: ObjectModel = field(default_factory=_default_object)
    options: TrialOptions = TrialOptions()

    def __post_init__(self):
        lo, hi = ENVELOPE_DISTANCE
        for d in self.distances:
            if not lo <= d <= hi:
                raise ValueError(f"distance {d} m outside the camera envelope [{lo}, {hi}]")
        if self.trials < 1 or not self.positions:
            raise ValueError("need at least one trial and one position")


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SummaryRow, ...]
    records: tuple[ErrorRecord, ...]

    def means(self) -> list[float]:
        return [r.mean for r in self.rows]


def run_distance_sweep(cfg: DistanceSweepConfig, experiment: str = "distance-sweep") -> SweepResult:
    """Lateral error per camera distance, pooled over positions and trials.

    Frames that cannot be solved are counted, never fatal.
    """
    per_cell = len(cfg.positions) * cfg.trials
    records, rows = [], []
    for di, d in enumerate(cfg.distances):
        camera = camera_at(d)
        cell = []
        for pi, pos in enumerate(cfg.positions):
            scene = _scene(cfg.options, cfg.model, pos, cfg.yaw, camera)
            for t in range(cfg.trials):
                pose, est = _static_trial(scene, cfg.options, (_DISTANCE, di, pi, t))
                trial = di * per_cell + pi * cfg.trials + t
                cell.append(_record(experiment, trial, d, cfg.yaw, scene, pose, est, cfg.options))
        rows.append(_summarize(d, cell))
        records.extend(cell)
    return SweepResult(tuple(rows), tuple(records))


# ------------------------------------------------------------- orientation sweep


@dataclass(frozen=True)
class OrientationSweepConfig:
    distance: float = ORIENTATION_DISTANCE
    yaws_deg: tuple[float, ...] = tuple(float(y) for y in range(0, 360, 10))
    position: tuple[float, float, float] = WORKSPACE_CENTER
    trials: int = 20
    model: ObjectModel = field(default_factory=_default_object)
    options: TrialOptions = TrialOptions()

    def __post_init__(self):
        lo, hi = ENVELOPE_DISTANCE
        if not lo <= self.distance <= hi:
            raise ValueError(f"distance {self.distance} m outside the camera envelope")
        if self.trials < 1 or not self.yaws_deg:
            raise ValueError("need at least one trial and one yaw")


@dataclass(frozen=True)
class OrientationResult:
    mean: float
    std: float
    rows: tuple[SummaryRow, ...]  # value is yaw in degrees
    records: tuple[ErrorRecord, ...]

    def table_row(self, label: str) -> str:
        """``label  mean ± std`` in centimeters."""
        return f"{label}  {100 * self.mean:.1f} ± {100 * self.std:.1f}"


def face_on_yaws(cfg: OrientationSweepConfig, within_deg: float = 5.0) -> list[float]:
    """Yaws (degrees) at which a side face of the cuboid points at the camera."""
    cam = camera_at(cfg.distance).translation
    view = math.degrees(math.atan2(cam[1] - cfg.position[1], cam[0] - cfg.position[0]))
    out = []
    for y in cfg.yaws_deg:
        off = (y - view) % 90.0
        if min(off, 90.0 - off) <= within_deg:
            out.append(y)
    return out


def run_orientation_sweep(cfg: OrientationSweepConfig, experiment: str = "orientation-sweep") -> OrientationResult:
    camera = camera_at(cfg.distance)
    records, rows = [], []
    for yi, yaw_deg in enumerate(cfg.yaws_deg):
        yaw = math.radians(yaw_deg)
        scene = _scene(cfg.options, cfg.model, cfg.position, yaw, camera)
        cell = []
        for t in range(cfg.trials):
            pose, est = _static_trial(scene, cfg.options, (_ORIENTATION, yi, t))
            cell.append(_record(experiment, yi * cfg.trials + t, cfg.distance, yaw, scene, pose, est, cfg.options))
        rows.append(_summarize(yaw_deg, cell))
        records.extend(cell)
    mean, std = mean_std([r.lateral_err_m for r in records])
    return OrientationResult(mean, std, tuple(rows), tuple(records))


# ----------------------------------------------------------------- camera motion


@dataclass(frozen=True)
class CameraMotionConfig:
    frames: int = 500
    trajectory_seed: int = 0
    kind: str = "handheld"
    box: CameraBox = CameraBox()
    position: tuple[float, float, float] = WORKSPACE_CENTER
    yaw: float = math.radians(45.0)
    alpha: float = DEFAULT_ALPHA
    filter_mode: str = "inputs"
    tolerance: float = BAXTER_TOLERANCE
    model: ObjectModel = field(default_factory=_default_object)
    options: TrialOptions = TrialOptions()

    def __post_init__(self):
        if self.frames < 100:
            raise ValueError("camera-motion runs need at least 100 frames")


@dataclass(frozen=True)
class AxisCDF:
    values: np.ndarray
    fractions: np.ndarray
    within: float  # fraction with |error| <= tolerance


@dataclass(frozen=True)
class CameraMotionResult:
    raw: tuple[ErrorRecord, ...]
    filtered: tuple[ErrorRecord, ...]
    raw_cdf: dict[str, AxisCDF]
    filtered_cdf: dict[str, AxisCDF]
    solved: int
    dropped: int

    @property
    def records(self) -> tuple[ErrorRecord, ...]:
        return self.raw + self.filtered


def axis_cdfs(records: Sequence[ErrorRecord], tolerance: float) -> dict[str, AxisCDF]:
    """Empirical CDF of |error| per robot axis over records that carry a pose."""
    out = {}
    for axis in ("x", "y", "z"):
        errs = [abs(getattr(r, f"err_{axis}_m")) for r in records if not math.isnan(getattr(r, f"err_{axis}_m"))]
        xs, fr = ecdf(errs)
        out[axis] = AxisCDF(xs, fr, fraction_within(errs, tolerance))
    return out


def run_camera_motion(cfg: CameraMotionConfig, experiment: str = "camera-motion") -> CameraMotionResult:
    """Stationary object, moving camera; raw and filtered traces per frame.

    Unsolvable frames keep the previous filtered pose and are flagged dropped.
    """
    poses = camera_trajectory(cfg.kind, cfg.frames, cfg.trajectory_seed, cfg.box)
    filt = StreamFilter(cfg.alpha, cfg.filter_mode)
    raw, filtered = [], []
    dropped = 0
    for f, cam in enumerate(poses):
        scene = _scene(cfg.options, cfg.model, cfg.position, cfg.yaw, cam)
        est = estimate_frame(scene, cfg.options.noise, (_MOTION, f), cfg.options.pipeline)
        dropped += est.dropped
        dist = math.hypot(*cam.translation[:2])
        truth = scene.objects[0].pose
        raw.append(ErrorRecord.scored(experiment, f, dist, cfg.yaw, est.robot_object, truth,
                                      refined=est.refined, dropped=est.dropped))
        smoothed = filt.push(est)
        filtered.append(ErrorRecord.scored(experiment, f, dist, cfg.yaw, smoothed, truth,
                                           refined=est.refined, filtered=True, dropped=est.dropped))
    return CameraMotionResult(
        tuple(raw), tuple(filtered), axis_cdfs(raw, cfg.tolerance), axis_cdfs(filtered, cfg.tolerance),
        cfg.frames - dropped, dropped,
    )


# ------------------------------------------------------------------ grasp trials


@dataclass(frozen=True)
class GraspToleranceConfig:
    """Half-widths of the region a top-down parallel gripper tolerates."""

    finger: float = 0.02
    orthogonal: float = 0.05
    approach: float = 0.10
    shape: str = "cuboid"

    def __post_init__(self):
        if min(self.finger, self.orthogonal, self.approach) <= 0:
            raise ValueError("tolerances must be positive")
        if self.shape not in ("cuboid", "cylinder"):
            raise ValueError(f"unknown grasp shape {self.shape!r}")
        if self.shape == "cylinder" and self.finger != self.orthogonal:
            raise ValueError("a cylinder tolerates the same error in both horizontal directions")

    @classmethod
    def for_model(cls, model: ObjectModel, finger: float = 0.02, orthogonal: float = 0.05,
                  approach: float = 0.10) -> GraspToleranceConfig:
        """Round objects (cylinders, bottles) use the finger tolerance both ways."""
        if model.shape in ("cylinder", "bottle"):
            return cls(finger, finger, approach, "cylinder")
        return cls(finger, orthogonal, approach, "cuboid")


def yaw_of(pose: RigidTransform) -> float:
    """Heading of the body x-axis projected on the robot x-y plane."""
    r = pose.rotation.matrix()
    return math.atan2(r[1, 0], r[0, 0])


def finger_axis_yaw(model: ObjectModel, object_yaw: float) -> float:
    """Gripper yaw that closes the fingers across the thinner horizontal side."""
    return object_yaw if model.dimensions[0] <= model.dimensions[1] else object_yaw + 0.5 * math.pi


def gripper_frame_error(error: Sequence[float], grasp_yaw: float) -> tuple[float, float, float]:
    """Robot-frame position error as (finger, orthogonal, approach) components
    for a top-down gripper whose fingers close along ``grasp_yaw``."""
    c, s = math.cos(grasp_yaw), math.sin(grasp_yaw)
    ex, ey, ez = error
    return (c * ex + s * ey, -s * ex + c * ey, ez)


def grasp_succeeds(error: Sequence[float], grasp_yaw: float, tol: GraspToleranceConfig) -> bool:
    f, o, a = gripper_frame_error(error, grasp_yaw)
    return abs(f) <= tol.finger and abs(o) <= tol.orthogonal and abs(a) <= tol.approach


@dataclass(frozen=True)
class GraspTrialsConfig:
    objects: tuple[str, ...] = GRASP_OBJECTS
    camera_locations: tuple[tuple[float, float], ...] = ((1.2, math.radians(-20.0)), (1.5, math.radians(20.0)))
    grasps_per_location: int = 5
    finger: float = 0.02
    orthogonal: float = 0.05
    approach: float = 0.10
    options: TrialOptions = TrialOptions()
    models: dict = field(default_factory=dict, compare=False)  # optional name -> ObjectModel overrides


@dataclass(frozen=True)
class GraspResult:
    per_object: dict[str, float]
    overall: float
    successes: tuple[bool, ...]
    records: tuple[ErrorRecord, ...]


def run_grasp_trials(cfg: GraspTrialsConfig, experiment: str = "grasp-trials") -> GraspResult:
    """Random placements in the workspace, scored against the gripper tolerance box.

    The commanded grasp uses the estimated pose; a dropped frame is a failed grasp.
    """
    catalog = object_catalog()
    per_object, successes, records = {}, [], []
    n_per = len(cfg.camera_locations) * cfg.grasps_per_location
    half = 0.5 * np.asarray(WORKSPACE_SIZE)
    for oi, name in enumerate(cfg.objects):
        model = cfg.models.get(name) or catalog[name]
        tol = GraspToleranceConfig.for_model(model, cfg.finger, cfg.orthogonal, cfg.approach)
        wins = 0
        for li, (dist, az) in enumerate(cfg.camera_locations):
            camera = camera_at(dist, az)
            for g in range(cfg.grasps_per_location):
                place = noise_rng(cfg.options.noise, _GRASP, oi, li, g, _PLACEMENT_STREAM)
                pos = np.asarray(WORKSPACE_CENTER) + place.uniform(-half, half)
                pos[2] = WORKSPACE_CENTER[2]
                yaw = float(place.uniform(-math.pi, math.pi))
                scene = _scene(cfg.options, model, pos, yaw, camera)
                pose, est = _static_trial(scene, cfg.options, (_GRASP, oi, li, g))
                trial = oi * n_per + li * cfg.grasps_per_location + g
                rec = _record(experiment, trial, dist, yaw, scene, pose, est, cfg.options)
                ok = False
                if pose is not None:
                    err = (rec.err_x_m, rec.err_y_m, rec.err_z_m)
                    ok = grasp_succeeds(err, finger_axis_yaw(model, yaw_of(pose)), tol)
                wins += ok
                successes.append(ok)
                records.append(rec)
        per_object[name] = wins / n_per
    overall = sum(successes) / len(successes) if successes else math.nan
    return GraspResult(per_object, overall, tuple(successes), tuple(records))

