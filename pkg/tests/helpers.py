"""Shared strategies and pose generators for the tests."""

import math

import numpy as np
from hypothesis import strategies as st

from indirect_pose.belief import DEFAULT_MAX_ANGLE, associate_vertices, extract_peaks
from indirect_pose.se3 import RigidTransform, UnitQuaternion
from indirect_pose.sim.models import object_catalog
from indirect_pose.sim.perception import render_belief_stacks
from indirect_pose.sim.scene import NOISE_PRESETS, SceneConfig, place_object, random_scene

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)


@st.composite
def quaternions(draw):
    v = [draw(st.floats(-1.0, 1.0)) for _ in range(4)]
    if sum(c * c for c in v) < 1e-3:
        v = [1.0, 0.0, 0.0, 0.0]
    return UnitQuaternion.normalized(*v)


@st.composite
def transforms(draw):
    return RigidTransform(draw(quaternions()), (draw(finite), draw(finite), draw(finite)))


def random_pose(rng: np.random.Generator, scale: float = 1.0) -> RigidTransform:
    q = rng.standard_normal(4)
    return RigidTransform(UnitQuaternion.normalized(*q), tuple(scale * rng.standard_normal(3)))


def camera_facing_pose(rng: np.random.Generator, depth: float = 1.1) -> RigidTransform:
    """Object-in-camera pose with the object origin ahead of the camera."""
    axis = rng.standard_normal(3)
    q = UnitQuaternion.from_axis_angle(axis, rng.uniform(0, math.pi))
    t = (rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), depth + rng.uniform(-0.1, 0.1))
    return RigidTransform(q, t)


def render_pair(rng, name):
    """Two noiseless rendered instances with every keypoint on the map."""
    model = object_catalog()[name]
    while True:
        base = random_scene(rng, model)
        x, y, _ = base.objects[0].pose.translation
        dx, dy = rng.uniform(-0.3, 0.3, 2)
        other = place_object(model, (x + dx, y + dy, 0.0), rng.uniform(-math.pi, math.pi))
        scene = SceneConfig(base.intrinsics, base.camera_pose, (base.objects[0], other), base.joint_angles, base.robot)
        r = render_belief_stacks(scene, name, NOISE_PRESETS["clean"])
        if not np.isnan(r.keypoints_grid).any():
            return r


def association_correct(rendered) -> bool:
    truth = rendered.keypoints_grid
    insts = associate_vertices(extract_peaks(rendered.beliefs), rendered.affinities)
    if len(insts) != len(truth):
        return False
    for inst in insts:
        label = int(np.argmin([math.dist(inst.centroid.position, t[8]) for t in truth]))
        for j, v in enumerate(inst.vertices):
            if v is None or math.dist(v.position, truth[label, j]) > 0.5:
                return False
    return True


def separated(rendered, centroid_gap=10.0, blob_gap=4.0, max_angle=DEFAULT_MAX_ANGLE) -> bool:
    """Centroids at least ``centroid_gap`` cells apart, every same-map blob pair
    resolvable, and no vertex with the other centroid closer than its own inside
    the ``max_angle`` cone (a unit-direction field cannot tell those apart)."""
    g = rendered.keypoints_grid
    if math.dist(g[0, 8], g[1, 8]) < centroid_gap or min(math.dist(g[0, j], g[1, j]) for j in range(9)) < blob_gap:
        return False
    for own, other in ((0, 1), (1, 0)):
        for j in range(8):
            to_own, to_other = g[own, 8] - g[own, j], g[other, 8] - g[own, j]
            cos = to_own @ to_other / (np.linalg.norm(to_own) * np.linalg.norm(to_other))
            if np.linalg.norm(to_other) < np.linalg.norm(to_own) and math.acos(min(1.0, cos)) <= max_angle:
                return False
    return True
