import json
import math
import subprocess
import sys

import numpy as np
import pytest

from helpers import random_pose
from indirect_pose.cli import main
from indirect_pose.harness.results import COLUMNS, read_results
from indirect_pose.se3 import CameraIntrinsics, RigidTransform, UnitQuaternion
from indirect_pose.sim.models import object_catalog
from indirect_pose.sim.scene import camera_at, make_scene
from oracles import pinhole, pose_matrix

BOX = object_catalog()["sugar_box"]
FAST = {
    "distance-sweep": ["--trials", "2"],
    "orientation-sweep": ["--trials", "1"],
    "camera-motion": ["--frames", "100"],
    "grasp-trials": ["--trials", "1"],
}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_compose(tmp_path, rng):
    a, b = random_pose(rng), random_pose(rng)
    out = tmp_path / "r.json"
    code = main(["compose", write_json(tmp_path / "a.json", a.to_dict()), write_json(tmp_path / "b.json", b.to_dict()),
                 "--out", str(out)])
    assert code == 0
    got = RigidTransform.from_dict(json.loads(out.read_text()))
    assert np.allclose(pose_matrix(got), np.linalg.inv(pose_matrix(a)) @ pose_matrix(b), atol=1e-12)


def test_solve(tmp_path):
    truth = RigidTransform(UnitQuaternion.from_rotvec((0.3, -0.2, 0.1)), (0.02, -0.01, 1.1))
    k = CameraIntrinsics()
    M = pose_matrix(truth)
    corrs = [{"object_point": list(p), "image_point": list(pinhole(k.fx, k.fy, k.cx, k.cy, (M @ np.append(p, 1))[:3]))}
             for p in BOX.keypoints]
    src = write_json(tmp_path / "c.json", {"intrinsics": k.to_dict(), "correspondences": corrs})
    out = tmp_path / "sol.json"
    assert main(["solve", src, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert math.dist(RigidTransform.from_dict(doc["pose"]).translation, truth.translation) < 1e-6
    assert doc["converged"] and doc["reprojection_rmse"] < 1e-6


def test_solve_too_few_points_is_config_error(tmp_path, capsys):
    corrs = [{"object_point": [0, 0, i], "image_point": [300, 200 + i]} for i in range(4)]
    assert main(["solve", write_json(tmp_path / "c.json", {"correspondences": corrs})]) == 1
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("command", sorted(FAST))
def test_experiment_csv_deterministic(tmp_path, command):
    outs = []
    for i in range(2):
        out = tmp_path / f"{command}-{i}.csv"
        assert main([command, *FAST[command], "--seed", "3", "--quiet", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0].split(",") == list(COLUMNS)
    assert read_results(tmp_path / f"{command}-0.csv")


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["distance-sweep", "--trials", "2", "--seed", "1", "--quiet", "--out", str(a)])
    main(["distance-sweep", "--trials", "2", "--seed", "2", "--quiet", "--out", str(b)])
    assert a.read_bytes() != b.read_bytes()


def test_json_format_and_stdout(capsys):
    assert main(["grasp-trials", "--trials", "1", "--noise", "clean", "--object", "soup_can", "--format", "json"]) == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert len(doc["records"]) == 2
    assert "soup_can  100%" in captured.err


def test_clean_sweep_summary(capsys):
    assert main(["distance-sweep", "--trials", "1", "--noise", "clean", "--refine"]) == 0
    err = capsys.readouterr().err
    assert err.splitlines()[0].startswith("distance_m")
    assert all(" 0.00 " in line for line in err.splitlines()[1:])


def test_scene_and_filter_flags(tmp_path):
    scene = make_scene(BOX, (0.5, -0.1, 0.0), 0.5, camera_at(1.3))
    src = write_json(tmp_path / "scene.json", scene.to_dict())
    out = tmp_path / "r.csv"
    assert main(["orientation-sweep", "--scene", src, "--trials", "1", "--filter-alpha", "0.5", "--noise", "clean",
                 "--quiet", "--out", str(out)]) == 0
    recs = read_results(out)
    assert all(r.filtered for r in recs)
    assert max(r.lateral_err_m for r in recs) < 1e-6


def test_noise_json_file(tmp_path):
    src = write_json(tmp_path / "noise.json", {"pixel_sigma": 0.0})
    out = tmp_path / "r.csv"
    assert main(["distance-sweep", "--trials", "1", "--noise", src, "--quiet", "--out", str(out)]) == 0
    assert max(r.lateral_err_m for r in read_results(out)) < 1e-6


@pytest.mark.parametrize("argv", [
    ["distance-sweep", "--noise", "bogus"],
    ["distance-sweep", "--object", "no_such_object"],
    ["distance-sweep", "--trials", "0"],
    ["distance-sweep", "--filter-alpha", "1.5"],
    ["camera-motion", "--frames", "50"],
    ["teleport"],
])
def test_config_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 1


def test_bad_json_is_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["compose", str(bad), str(bad)]) == 1


@pytest.mark.parametrize("argv", [
    ["compose", "/nonexistent/a.json", "/nonexistent/b.json"],
    ["distance-sweep", "--trials", "1", "--out", "/nonexistent/dir/out.csv"],
    ["distance-sweep", "--trials", "1", "--noise", "/nonexistent/noise.json"],
    ["distance-sweep", "--trials", "1", "--scene", "/nonexistent/scene.json"],
])
def test_io_errors_exit_2(argv):
    assert main(argv) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    proc = subprocess.run([sys.executable, "-m", "indirect_pose", "grasp-trials", "--trials", "1", "--noise", "clean",
                           "--object", "sugar_box", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "all  100%" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "indirect_pose", "compose"], capture_output=True, text=True)
    assert proc.returncode == 1
