from __future__ import annotations

from typing import Sequence

import numpy as np

from ..se3 import RigidTransform, UnitQuaternion, compose


def forward_kinematics(chain, joint_angles: Sequence[float]) -> np.ndarray:
    """Robot-frame position of every joint in ``chain``, shape (n_joints, 3).

    Each joint frame is reached from the previous one by the joint's fixed
    offset; the joint keypoint sits at that frame's origin and the joint
    then rotates about its axis.
    """
    chain.check_limits(joint_angles)
    T = chain.base
    out = np.empty((len(chain.joints), 3))
    for i, (joint, angle) in enumerate(zip(chain.joints, joint_angles)):
        T = compose(T, RigidTransform(UnitQuaternion.identity(), joint.offset))
        out[i] = T.translation
        T = compose(T, RigidTransform(UnitQuaternion.from_axis_angle(joint.axis, angle), (0.0, 0.0, 0.0)))
    return out
