"""Object trajectory recovery via contact anchors and rigid SVD alignment."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateAnchorsError, ValidationError
from .fk import fk_arrays
from .geometry import RigidTransform, matrix_to_quat
from .motion import HOIReference, MotionClip, ObjectTrajectory

COINCIDENT_TOL = 1e-9


class AnchorFrame(Enum):
    OBJECT_LOCAL = "object_local"
    HAND_LOCAL = "hand_local"
    WORLD = "world"


@dataclass(frozen=True)
class AnchorSet:
    """P contact-anchor points tagged with the frame they are expressed in."""

    points: np.ndarray  # (P, 3)
    frame: AnchorFrame
    hand: int | None = None  # hand id for HAND_LOCAL anchors

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValidationError("anchor points must have shape (P, 3)")
        if self.points.shape[0] < 3:
            raise ValidationError("alignment needs at least 3 anchor points")
        if not np.all(np.isfinite(self.points)):
            raise ValidationError("anchor points must be finite")
        if self.frame == AnchorFrame.HAND_LOCAL and self.hand is None:
            raise ValidationError("hand-local anchors need a hand id")


def default_palm_anchors(side: float = 0.04) -> np.ndarray:
    """Corners of a palm-plane square, in hand-local coordinates."""
    h = side / 2.0
    return np.array([[h, h, 0.0], [h, -h, 0.0], [-h, -h, 0.0], [-h, h, 0.0]])


def anchors_to_hand_frame(anchors_object_local: AnchorSet, object_pose_at_onset: RigidTransform,
                          hand_pose_at_onset: RigidTransform, hand: int = 0) -> AnchorSet:
    """Re-express object-local anchors in a hand's local frame at the onset step."""
    if anchors_object_local.frame != AnchorFrame.OBJECT_LOCAL:
        raise ValidationError(f"expected object-local anchors, got {anchors_object_local.frame}")
    rel = hand_pose_at_onset.invert().compose(object_pose_at_onset)
    return AnchorSet(rel.apply(anchors_object_local.points), AnchorFrame.HAND_LOCAL, hand=hand)


def anchors_to_world(anchors_hand_local: AnchorSet, hand_pose_at_n: RigidTransform) -> AnchorSet:
    if anchors_hand_local.frame != AnchorFrame.HAND_LOCAL:
        raise ValidationError(f"expected hand-local anchors, got {anchors_hand_local.frame}")
    return AnchorSet(hand_pose_at_n.apply(anchors_hand_local.points), AnchorFrame.WORLD)


@dataclass(frozen=True)
class AlignmentResult:
    transform: RigidTransform
    residual: float  # Frobenius norm of R*source + t - target
    degenerate: bool  # collinear source: rotation about the line was tie-broken


def kabsch_align(source: np.ndarray, target: np.ndarray) -> AlignmentResult:
    """Least-squares rigid transform mapping source points onto target points.

    Returns the (R, t) minimizing the Frobenius norm of R*source + t - target
    over proper rotations. Collinear sources leave a rotation about the line
    unobservable; the tie goes to the rotation closest to identity and the
    result is flagged degenerate. Fully coincident sources raise.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValidationError(f"point sets must both be (P, 3), got {src.shape} and {tgt.shape}")
    if src.shape[0] < 3:
        raise ValidationError("alignment needs at least 3 points")
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(tgt))):
        raise ValidationError("points must be finite")

    src_c = src.mean(axis=0)
    tgt_c = tgt.mean(axis=0)
    a = src - src_c
    b = tgt - tgt_c

    spread = np.linalg.svd(a, compute_uv=False)
    scale = max(1.0, float(np.abs(src).max()))
    if spread[0] < COINCIDENT_TOL * scale:
        raise DegenerateAnchorsError("all source points coincide; rotation is unconstrained")
    degenerate = spread[1] < 1e-9 * spread[0]

    h = a.T @ b
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T

    if degenerate:
        r = _closest_to_identity_about_axis(r, _principal_axis(a))

    t = tgt_c - r @ src_c
    residual = float(np.linalg.norm(src @ r.T + t - tgt))
    return AlignmentResult(RigidTransform(matrix_to_quat(r), t), residual, degenerate)


def _principal_axis(centered: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(centered)
    return vt[0]


def _closest_to_identity_about_axis(r: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Among r @ Rot(axis, phi), pick the rotation with maximal trace."""
    u = axis / np.linalg.norm(axis)
    ux = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    # trace(r @ Rot(u, phi)) = alpha*cos(phi) + beta*sin(phi) + gamma
    alpha = np.trace(r) - u @ r @ u
    beta = np.trace(r @ ux)
    phi = np.arctan2(beta, alpha)
    rot = (
        np.cos(phi) * np.eye(3)
        + (1.0 - np.cos(phi)) * np.outer(u, u)
        + np.sin(phi) * ux
    )
    return r @ rot


def hand_pose_from_fk(pos: np.ndarray, quat: np.ndarray, joint: int) -> RigidTransform:
    return RigidTransform(quat[joint], pos[joint])


def recover_object_trajectory(human: MotionClip, reference: HOIReference,
                              anchors_object_local: AnchorSet, n_onset: int,
                              hands: tuple[int, ...] | None = None) -> ObjectTrajectory:
    """Rebuild the object pose sequence implied by the planned hand motion.

    Frames up to and including the onset copy the reference object pose; later
    frames solve a rigid alignment from object-local anchors to their desired
    world positions, which follow each participating hand rigidly from the
    hand-local mapping frozen at onset. Two-handed interactions stack both
    anchor sets into a single least-squares problem.
    """
    skeleton = human.skeleton
    n_frames = len(human)
    if not (0 <= n_onset < n_frames):
        raise ValidationError(f"onset frame {n_onset} outside clip of length {n_frames}")

    if hands is None:
        # hands participating = hands in contact at onset per the reference mask
        at_onset = reference.contacts.flags[min(n_onset, len(reference) - 1)]
        hands = tuple(int(h) for h in np.nonzero(at_onset)[0])
        if not hands:
            hands = tuple(range(reference.contacts.hand_count))

    hand_joints = skeleton.hand_joints
    obj_onset = RigidTransform(reference.object.quaternions[n_onset], reference.object.positions[n_onset])

    pos_onset, quat_onset = fk_arrays(skeleton, human.root_pos[n_onset], human.root_quat[n_onset],
                                      human.joint_aa[n_onset])
    per_hand_local = []
    for h in hands:
        hp = hand_pose_from_fk(pos_onset, quat_onset, hand_joints[h])
        per_hand_local.append(anchors_to_hand_frame(anchors_object_local, obj_onset, hp, hand=h))

    source = np.concatenate([anchors_object_local.points] * len(hands), axis=0)

    out_pos = np.array(reference.object.positions, copy=True)
    out_quat = np.array(reference.object.quaternions, copy=True)
    for n in range(n_onset + 1, n_frames):
        pos, quat = fk_arrays(skeleton, human.root_pos[n], human.root_quat[n], human.joint_aa[n])
        targets = [
            anchors_to_world(loc, hand_pose_from_fk(pos, quat, hand_joints[h])).points
            for h, loc in zip(hands, per_hand_local)
        ]
        result = kabsch_align(source, np.concatenate(targets, axis=0))
        out_quat[n] = result.transform.rotation
        out_pos[n] = result.transform.translation
    return ObjectTrajectory(out_pos, out_quat, human.fps)
