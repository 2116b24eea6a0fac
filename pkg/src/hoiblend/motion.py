"""Motion containers: pose frames, clips, object trajectories, references.

Clips store frames as stacked arrays (struct-of-arrays) for fast math; the
per-frame view types give structured access where convenient. All containers
are treated as immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import quat_from_axis_angle, quat_to_axis_angle
from .skeleton import SkeletonSpec

QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class PoseFrame:
    """Root transform plus per-joint axis-angle rotations for one frame."""

    root_position: np.ndarray
    root_rotation: np.ndarray  # unit quaternion, wxyz
    joint_rotations: np.ndarray  # (J, 3) axis-angle

    def __post_init__(self):
        object.__setattr__(self, "root_position", np.asarray(self.root_position, dtype=float))
        object.__setattr__(self, "root_rotation", np.asarray(self.root_rotation, dtype=float))
        object.__setattr__(self, "joint_rotations", np.asarray(self.joint_rotations, dtype=float))
        if self.root_position.shape != (3,) or self.root_rotation.shape != (4,):
            raise ValidationError("pose frame root fields have wrong shape")
        if self.joint_rotations.ndim != 2 or self.joint_rotations.shape[1] != 3:
            raise ValidationError("joint_rotations must have shape (J, 3)")
        if abs(np.linalg.norm(self.root_rotation) - 1.0) > 1e-9:
            raise ValidationError("root rotation quaternion is not unit norm")
        if not np.all(np.isfinite(self.joint_rotations)):
            raise ValidationError("joint rotations contain non-finite values")


class MotionClip:
    """Human pose trajectory at a fixed frame rate."""

    def __init__(self, skeleton: SkeletonSpec, root_pos: np.ndarray, root_quat: np.ndarray,
                 joint_aa: np.ndarray, fps: float):
        self.skeleton = skeleton
        self.root_pos = np.asarray(root_pos, dtype=float)
        self.root_quat = np.asarray(root_quat, dtype=float)
        self.joint_aa = np.asarray(joint_aa, dtype=float)
        self.fps = float(fps)
        n = self.root_pos.shape[0]
        if n == 0:
            raise ValidationError("motion clip has no frames")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        if self.root_quat.shape != (n, 4) or self.root_pos.shape != (n, 3):
            raise ValidationError("root arrays have inconsistent shapes")
        if self.joint_aa.shape != (n, skeleton.joint_count, 3):
            raise ValidationError(
                f"joint_aa shape {self.joint_aa.shape} does not match skeleton with "
                f"{skeleton.joint_count} joints over {n} frames")
        norms = np.linalg.norm(self.root_quat, axis=-1)
        bad = np.nonzero(np.abs(norms - 1.0) > QUAT_NORM_TOL)[0]
        if bad.size:
            raise ValidationError(f"non-unit root quaternion at frame {int(bad[0])}")

    @classmethod
    def from_frames(cls, skeleton: SkeletonSpec, frames: list[PoseFrame], fps: float) -> "MotionClip":
        if not frames:
            raise ValidationError("motion clip has no frames")
        return cls(
            skeleton,
            np.stack([f.root_position for f in frames]),
            np.stack([f.root_rotation for f in frames]),
            np.stack([f.joint_rotations for f in frames]),
            fps,
        )

    def __len__(self) -> int:
        return self.root_pos.shape[0]

    def frame(self, n: int) -> PoseFrame:
        return PoseFrame(self.root_pos[n], self.root_quat[n], self.joint_aa[n])


class ObjectTrajectory:
    """Rigid object pose per frame: position and unit quaternion."""

    def __init__(self, positions: np.ndarray, quaternions: np.ndarray, fps: float):
        self.positions = np.asarray(positions, dtype=float)
        self.quaternions = np.asarray(quaternions, dtype=float)
        self.fps = float(fps)
        n = self.positions.shape[0]
        if self.positions.shape != (n, 3) or self.quaternions.shape != (n, 4):
            raise ValidationError("object trajectory arrays have inconsistent shapes")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        norms = np.linalg.norm(self.quaternions, axis=-1)
        bad = np.nonzero(np.abs(norms - 1.0) > QUAT_NORM_TOL)[0]
        if bad.size:
            raise ValidationError(f"non-unit object quaternion at frame {int(bad[0])}")

    def __len__(self) -> int:
        return self.positions.shape[0]


class ContactMask:
    """Per-frame, per-hand boolean contact flags, shape (N, hands)."""

    def __init__(self, flags: np.ndarray):
        self.flags = np.asarray(flags, dtype=bool)
        if self.flags.ndim != 2:
            raise ValidationError("contact mask must be 2-D (frames x hands)")

    def __len__(self) -> int:
        return self.flags.shape[0]

    @property
    def hand_count(self) -> int:
        return self.flags.shape[1]

    @property
    def any_contact(self) -> np.ndarray:
        return self.flags.any(axis=1)


@dataclass(frozen=True)
class HOIReference:
    """Paired human motion, object trajectory, contact mask and object shape."""

    human: MotionClip
    object: ObjectTrajectory
    contacts: ContactMask
    object_geometry: np.ndarray = field(default_factory=lambda: np.zeros((1, 3)))

    def __post_init__(self):
        object.__setattr__(self, "object_geometry", np.asarray(self.object_geometry, dtype=float))
        n = len(self.human)
        if len(self.object) != n or len(self.contacts) != n:
            raise ValidationError(
                f"frame counts differ: human {n}, object {len(self.object)}, contacts {len(self.contacts)}")
        if abs(self.human.fps - self.object.fps) > 1e-12:
            raise ValidationError("human and object frame rates differ")
        if self.object_geometry.ndim != 2 or self.object_geometry.shape[1] != 3:
            raise ValidationError("object_geometry must have shape (V, 3)")

    def __len__(self) -> int:
        return len(self.human)

    @property
    def fps(self) -> float:
        return self.human.fps

    @property
    def skeleton(self) -> SkeletonSpec:
        return self.human.skeleton


# ---------------------------------------------------------------------------
# Motion feature tensor: the (N, D) layout consumed by the denoiser seam.
# Row layout: [root_pos (3), root axis-angle (3), joint axis-angle (3*J)].

def feature_dim(skeleton: SkeletonSpec) -> int:
    return 6 + 3 * skeleton.joint_count


def clip_to_features(clip: MotionClip) -> np.ndarray:
    n = len(clip)
    root_aa = quat_to_axis_angle(clip.root_quat)
    return np.concatenate([clip.root_pos, root_aa, clip.joint_aa.reshape(n, -1)], axis=1)


def features_to_clip(features: np.ndarray, skeleton: SkeletonSpec, fps: float) -> MotionClip:
    features = np.asarray(features, dtype=float)
    n, d = features.shape
    if d != feature_dim(skeleton):
        raise ValidationError(f"feature dim {d} does not match skeleton ({feature_dim(skeleton)})")
    root_pos = features[:, 0:3]
    root_quat = quat_from_axis_angle(features[:, 3:6])
    joint_aa = features[:, 6:].reshape(n, skeleton.joint_count, 3)
    return MotionClip(skeleton, root_pos, root_quat, joint_aa, fps)
