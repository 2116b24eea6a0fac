"""Skeleton description and the default desk-scale rig.

The default skeleton has 16 body joints plus two rigid hand end-effectors.
Its zero pose is deliberately non-anatomical: legs and arms extend forward
along +x, so a standing configuration requires actively rotating the hips
down. Axes: x forward, y left, z up.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Joint:
    name: str
    parent: int | None
    local_offset: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "local_offset", np.asarray(self.local_offset, dtype=float))
        if self.local_offset.shape != (3,):
            raise ValidationError(f"joint {self.name}: local_offset must be a 3-vector")


@dataclass(frozen=True)
class SkeletonSpec:
    """Joint hierarchy in topological order (parents before children)."""

    joints: tuple[Joint, ...]
    body_joint_count: int
    hand_joint_count: int
    interaction_joints: frozenset[int]
    foot_joints: frozenset[int]
    pelvis_joint: int = 0

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "interaction_joints", frozenset(self.interaction_joints))
        object.__setattr__(self, "foot_joints", frozenset(self.foot_joints))
        n = len(self.joints)
        roots = [i for i, j in enumerate(self.joints) if j.parent is None]
        if len(roots) != 1:
            raise ValidationError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, j in enumerate(self.joints):
            if j.parent is not None and not (0 <= j.parent < i):
                raise ValidationError(f"joint {i} ({j.name}): parent index {j.parent} breaks topological order")
        if self.body_joint_count + self.hand_joint_count != n:
            raise ValidationError("body_joint_count + hand_joint_count must equal the joint count")
        for s, label in ((self.interaction_joints, "interaction"), (self.foot_joints, "foot")):
            if any(not (0 <= i < n) for i in s):
                raise ValidationError(f"{label} joint index out of range")
        if not (0 <= self.pelvis_joint < n):
            raise ValidationError("pelvis joint index out of range")

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def parents(self) -> np.ndarray:
        return np.array([-1 if j.parent is None else j.parent for j in self.joints])

    @property
    def offsets(self) -> np.ndarray:
        return np.stack([j.local_offset for j in self.joints])

    @property
    def hand_joints(self) -> tuple[int, ...]:
        """Hand end-effectors occupy the last hand_joint_count slots."""
        return tuple(range(self.body_joint_count, self.joint_count))

    def index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)

    def indices(self, names) -> frozenset[int]:
        return frozenset(self.index(n) for n in names)


DEFAULT_INTERACTION_JOINT_NAMES = (
    "chest",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
)

# Named interaction-joint sets selectable from the CLI.
INTERACTION_JOINT_SETS = {
    "upper": DEFAULT_INTERACTION_JOINT_NAMES,
    "arms": ("l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"),
    "wrists": ("l_wrist", "r_wrist"),
    "none": (),
}


def default_skeleton() -> SkeletonSpec:
    """Desk-scale rig: 16 body joints + 2 rigid hands, ~0.90 m standing pelvis."""
    j = [
        Joint("pelvis", None, (0.0, 0.0, 0.0)),
        Joint("l_hip", 0, (0.0, 0.10, -0.02)),
        Joint("l_knee", 1, (0.40, 0.0, 0.0)),
        Joint("l_foot", 2, (0.45, 0.0, 0.0)),
        Joint("r_hip", 0, (0.0, -0.10, -0.02)),
        Joint("r_knee", 4, (0.40, 0.0, 0.0)),
        Joint("r_foot", 5, (0.45, 0.0, 0.0)),
        Joint("spine", 0, (0.0, 0.0, 0.12)),
        Joint("chest", 7, (0.0, 0.0, 0.15)),
        Joint("head", 8, (0.0, 0.0, 0.25)),
        Joint("l_shoulder", 8, (0.0, 0.22, 0.05)),
        Joint("l_elbow", 10, (0.28, 0.0, 0.0)),
        Joint("l_wrist", 11, (0.26, 0.0, 0.0)),
        Joint("r_shoulder", 8, (0.0, -0.22, 0.05)),
        Joint("r_elbow", 13, (0.28, 0.0, 0.0)),
        Joint("r_wrist", 14, (0.26, 0.0, 0.0)),
        Joint("l_hand", 12, (0.09, 0.0, 0.0)),
        Joint("r_hand", 15, (0.09, 0.0, 0.0)),
    ]
    names = [x.name for x in j]
    return SkeletonSpec(
        joints=tuple(j),
        body_joint_count=16,
        hand_joint_count=2,
        interaction_joints=frozenset(names.index(n) for n in DEFAULT_INTERACTION_JOINT_NAMES),
        foot_joints=frozenset((names.index("l_foot"), names.index("r_foot"))),
        pelvis_joint=0,
    )


def standing_pelvis_height(skeleton: SkeletonSpec) -> float:
    """Pelvis height with legs fully extended straight down (T-pose stance)."""
    total = 0.0
    i = next(iter(sorted(skeleton.foot_joints)))
    while i != skeleton.pelvis_joint:
        joint = skeleton.joints[i]
        off = joint.local_offset
        # hip offsets hang below the pelvis; leg segments extend by their length
        total += abs(off[2]) if joint.parent == skeleton.pelvis_joint else float(np.linalg.norm(off))
        i = joint.parent
    return total
