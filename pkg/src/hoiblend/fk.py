"""Forward kinematics over the joint hierarchy."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .geometry import RigidTransform, quat_from_axis_angle, quat_multiply, quat_rotate
from .motion import MotionClip, PoseFrame
from .skeleton import SkeletonSpec


def fk_arrays(skeleton: SkeletonSpec, root_pos: np.ndarray, root_quat: np.ndarray,
              joint_aa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World positions (J,3) and orientations (J,4) for one pose.

    The hot path used by the simulator; avoids building transform objects.
    """
    parents = skeleton.parents
    offsets = skeleton.offsets
    nj = skeleton.joint_count
    local_q = quat_from_axis_angle(joint_aa)
    pos = np.empty((nj, 3))
    quat = np.empty((nj, 4))
    for j in range(nj):
        p = parents[j]
        if p < 0:
            pos[j] = root_pos
            quat[j] = quat_multiply(root_quat, local_q[j])
        else:
            pos[j] = pos[p] + quat_rotate(quat[p], offsets[j])
            quat[j] = quat_multiply(quat[p], local_q[j])
    return pos, quat


def forward_kinematics(skeleton: SkeletonSpec, frame: PoseFrame) -> list[RigidTransform]:
    """World-frame rigid transform of every joint, in joint order."""
    if frame.joint_rotations.shape[0] != skeleton.joint_count:
        raise ValidationError(
            f"pose has {frame.joint_rotations.shape[0]} joints, skeleton has {skeleton.joint_count}")
    pos, quat = fk_arrays(skeleton, frame.root_position, frame.root_rotation, frame.joint_rotations)
    return [RigidTransform(quat[j], pos[j]) for j in range(skeleton.joint_count)]


def clip_joint_positions(clip: MotionClip) -> np.ndarray:
    """World joint positions for every frame, shape (N, J, 3)."""
    n = len(clip)
    out = np.empty((n, clip.skeleton.joint_count, 3))
    for i in range(n):
        out[i], _ = fk_arrays(clip.skeleton, clip.root_pos[i], clip.root_quat[i], clip.joint_aa[i])
    return out


def joint_world_transform(skeleton: SkeletonSpec, frame: PoseFrame, joint: int) -> RigidTransform:
    pos, quat = fk_arrays(skeleton, frame.root_position, frame.root_rotation, frame.joint_rotations)
    return RigidTransform(quat[joint], pos[joint])
