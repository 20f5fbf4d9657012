"""Command-line entry point.

Experiment subcommands write per-trial records (CSV or JSON) to ``--out`` or
standard output and a short summary to standard error. Exit status is 0 on
success, 1 for a bad configuration, and 2 when a file cannot be read or
written.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .errors import PoseError
from .harness.experiments import (
    CameraMotionConfig,
    DistanceSweepConfig,
    GraspTrialsConfig,
    OrientationSweepConfig,
    TrialOptions,
    run_camera_motion,
    run_distance_sweep,
    run_grasp_trials,
    run_orientation_sweep,
)
from .harness.pipeline import PipelineConfig
from .harness.results import records_to_csv, records_to_json
from .pnp import Correspondence, solve_pnp
from .se3 import CameraIntrinsics, RigidTransform, object_in_robot_frame
from .sim.models import load_object, load_robot
from .sim.scene import load_noise, load_scene

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class ConfigError(Exception):
    """Invalid arguments or configuration content."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; 2 is reserved for I/O
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")  # OSError -> I/O exit
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ------------------------------------------------------------------ one-shot tools


def _cmd_compose(args) -> int:
    cam_robot = RigidTransform.from_dict(_read_json(args.cam_robot))
    cam_object = RigidTransform.from_dict(_read_json(args.cam_object))
    result = object_in_robot_frame(cam_robot, cam_object)
    _emit(json.dumps(result.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_solve(args) -> int:
    doc = _read_json(args.correspondences)
    k = CameraIntrinsics.from_dict(doc["intrinsics"]) if "intrinsics" in doc else CameraIntrinsics()
    corrs = [
        Correspondence(tuple(c["object_point"]), tuple(c["image_point"]), float(c.get("weight", 1.0)))
        for c in doc["correspondences"]
    ]
    sol = solve_pnp(corrs, k)
    out = {
        "pose": sol.pose.to_dict(),
        "reprojection_rmse": sol.reprojection_rmse,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


# -------------------------------------------------------------------- experiments


def _options(args) -> tuple[TrialOptions, object]:
    """Trial options plus the object model chosen by --object / --scene."""
    noise = load_noise(args.noise, seed=args.seed)
    robot = load_robot(args.robot)
    model = load_object(args.object) if args.object else None
    opts = TrialOptions(noise=noise, pipeline=PipelineConfig(refine=args.refine), robot=robot)
    if args.scene:
        scene = load_scene(args.scene, robot)
        opts = replace(opts, intrinsics=scene.intrinsics, joint_angles=scene.joint_angles)
        if model is None and scene.objects:
            model = scene.objects[0].model
    if args.filter_alpha is not None and args.command != "camera-motion":
        opts = replace(opts, filter_alpha=args.filter_alpha)
    return opts, model


def _with_model(kwargs: dict, model) -> dict:
    if model is not None:
        kwargs["model"] = model
    return kwargs


def _cmd_distance_sweep(args) -> tuple[list, str]:
    opts, model = _options(args)
    kw = _with_model({"options": opts}, model)
    if args.trials is not None:
        kw["trials"] = args.trials
    res = run_distance_sweep(DistanceSweepConfig(**kw))
    lines = ["distance_m  mean_cm  std_cm  solved  dropped"]
    lines += [f"{r.value:.2f}  {100 * r.mean:.2f}  {100 * r.std:.2f}  {r.solved}  {r.dropped}" for r in res.rows]
    return list(res.records), "\n".join(lines)


def _cmd_orientation_sweep(args) -> tuple[list, str]:
    opts, model = _options(args)
    kw = _with_model({"options": opts}, model)
    if args.trials is not None:
        kw["trials"] = args.trials
    cfg = OrientationSweepConfig(**kw)
    res = run_orientation_sweep(cfg)
    dropped = sum(r.dropped for r in res.rows)
    return list(res.records), res.table_row(cfg.model.name) + f" cm  (dropped {dropped})"


def _cmd_camera_motion(args) -> tuple[list, str]:
    opts, model = _options(args)
    kw = _with_model({"options": opts, "frames": args.frames, "trajectory_seed": args.seed}, model)
    if args.filter_alpha is not None:
        kw["alpha"] = args.filter_alpha
    res = run_camera_motion(CameraMotionConfig(**kw))
    lines = [f"frames solved {res.solved}, dropped {res.dropped}", "axis  raw_within_2cm  filtered_within_2cm"]
    lines += [f"{a}  {res.raw_cdf[a].within:.3f}  {res.filtered_cdf[a].within:.3f}" for a in "xyz"]
    return list(res.records), "\n".join(lines)


def _cmd_grasp_trials(args) -> tuple[list, str]:
    opts, model = _options(args)
    kw: dict = {"options": opts}
    if model is not None:
        kw["objects"] = (model.name,)
        kw["models"] = {model.name: model}
    if args.trials is not None:
        kw["grasps_per_location"] = args.trials
    res = run_grasp_trials(GraspTrialsConfig(**kw))
    lines = [f"{name}  {100 * rate:.0f}%" for name, rate in res.per_object.items()]
    lines.append(f"all  {100 * res.overall:.0f}%")
    return list(res.records), "\n".join(lines)


_EXPERIMENTS = {
    "distance-sweep": _cmd_distance_sweep,
    "orientation-sweep": _cmd_orientation_sweep,
    "camera-motion": _cmd_camera_motion,
    "grasp-trials": _cmd_grasp_trials,
}


def _run_experiment(args) -> int:
    records, summary = _EXPERIMENTS[args.command](args)
    text = records_to_csv(records) if args.format == "csv" else records_to_json(records)
    _emit(text, args.out)
    if not args.quiet:
        print(summary, file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------------ parser


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scene", help="scene JSON supplying intrinsics, joint angles and object")
    common.add_argument("--object", help="catalog object name or object JSON file")
    common.add_argument("--robot", help="robot keypoint model JSON (default: bundled model)")
    common.add_argument("--noise", default="nominal", help="noise preset (clean|nominal|harsh) or JSON file")
    common.add_argument("--seed", type=int, default=0, help="base seed for all random streams")
    common.add_argument("--trials", type=_positive_int, help="trials per cell (grasps per camera location)")
    common.add_argument("--refine", action="store_true", help="enable dense pose refinement")
    common.add_argument("--filter-alpha", type=float, help="exponential filter weight in (0, 1]")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on standard error")

    parser = _Parser(prog="indirect-pose", description="Object pose in the robot frame from an external camera.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compose", help="object pose in robot frame from two camera-frame pose files")
    p.add_argument("cam_robot", help="JSON pose of the robot in the camera frame")
    p.add_argument("cam_object", help="JSON pose of the object in the camera frame")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser("solve", help="PnP from a correspondence JSON file")
    p.add_argument("correspondences")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    for name, help_text in (
        ("distance-sweep", "lateral error against camera distance"),
        ("orientation-sweep", "lateral error over object yaw at a fixed distance"),
        ("camera-motion", "raw and filtered error along a hand-held camera path"),
        ("grasp-trials", "grasp success against gripper tolerances"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "camera-motion":
            p.add_argument("--frames", type=_positive_int, default=500)
        p.set_defaults(func=_run_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"indirect-pose: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, PoseError, ValueError, KeyError, TypeError) as exc:
        print(f"indirect-pose: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
