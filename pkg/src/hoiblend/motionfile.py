"""Canonical motion-file format: one JSON document per reference clip.

Layout (version 1):
    version, fps, skeleton {joints [{name, parent, offset[3]}], body_joint_count,
    hand_joint_count, interaction_joints, foot_joints, pelvis_joint},
    frames [{root_pos[3], root_quat[4 wxyz], joint_aa[J][3]}],
    object [{pos[3], quat[4 wxyz]}], contacts [[bool per hand]],
    object_vertices [[3]].

Floats are serialized with repr-level precision, so save/load round-trips
numeric fields bit-exactly.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .errors import MotionFileError, ValidationError
from .motion import QUAT_NORM_TOL, ContactMask, HOIReference, MotionClip, ObjectTrajectory
from .skeleton import Joint, SkeletonSpec

FORMAT_VERSION = 1


def _skeleton_to_dict(s: SkeletonSpec) -> dict:
    return {
        "joints": [
            {"name": j.name, "parent": j.parent, "offset": list(j.local_offset)} for j in s.joints
        ],
        "body_joint_count": s.body_joint_count,
        "hand_joint_count": s.hand_joint_count,
        "interaction_joints": sorted(s.interaction_joints),
        "foot_joints": sorted(s.foot_joints),
        "pelvis_joint": s.pelvis_joint,
    }


def _skeleton_from_dict(d: dict) -> SkeletonSpec:
    joints = tuple(Joint(j["name"], j["parent"], np.array(j["offset"], dtype=float)) for j in d["joints"])
    return SkeletonSpec(
        joints=joints,
        body_joint_count=int(d["body_joint_count"]),
        hand_joint_count=int(d["hand_joint_count"]),
        interaction_joints=frozenset(int(i) for i in d["interaction_joints"]),
        foot_joints=frozenset(int(i) for i in d["foot_joints"]),
        pelvis_joint=int(d["pelvis_joint"]),
    )


def save_clip(ref: HOIReference, path: str) -> None:
    doc = {
        "version": FORMAT_VERSION,
        "fps": ref.fps,
        "skeleton": _skeleton_to_dict(ref.skeleton),
        "frames": [
            {
                "root_pos": list(ref.human.root_pos[n]),
                "root_quat": list(ref.human.root_quat[n]),
                "joint_aa": ref.human.joint_aa[n].tolist(),
            }
            for n in range(len(ref))
        ],
        "object": [
            {"pos": list(ref.object.positions[n]), "quat": list(ref.object.quaternions[n])}
            for n in range(len(ref))
        ],
        "contacts": ref.contacts.flags.tolist(),
        "object_vertices": ref.object_geometry.tolist(),
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(doc, f)
    os.replace(tmp, path)


def load_clip(path: str) -> HOIReference:
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MotionFileError(f"{path}: not a valid motion file: {e}") from e

    try:
        if doc.get("version") != FORMAT_VERSION:
            raise MotionFileError(f"unsupported motion file version {doc.get('version')!r}")
        fps = float(doc["fps"])
        if fps <= 0:
            raise MotionFileError(f"fps must be positive, got {fps}")
        skeleton = _skeleton_from_dict(doc["skeleton"])
        frames = doc["frames"]
        if not frames:
            raise MotionFileError("empty clip")

        n = len(frames)
        nj = skeleton.joint_count
        root_pos = np.empty((n, 3))
        root_quat = np.empty((n, 4))
        joint_aa = np.empty((n, nj, 3))
        for i, fr in enumerate(frames):
            root_pos[i] = fr["root_pos"]
            root_quat[i] = fr["root_quat"]
            aa = np.asarray(fr["joint_aa"], dtype=float)
            if aa.shape != (nj, 3):
                raise MotionFileError(f"frame {i}: joint_aa has shape {aa.shape}, expected ({nj}, 3)")
            joint_aa[i] = aa
        _check_unit_quats(root_quat, "root")

        obj = doc["object"]
        if len(obj) != n:
            raise MotionFileError(f"object trajectory has {len(obj)} frames, human has {n}")
        obj_pos = np.array([o["pos"] for o in obj], dtype=float)
        obj_quat = np.array([o["quat"] for o in obj], dtype=float)
        _check_unit_quats(obj_quat, "object")

        contacts = np.asarray(doc["contacts"], dtype=bool)
        if contacts.shape[0] != n:
            raise MotionFileError(f"contact mask has {contacts.shape[0]} frames, human has {n}")
        vertices = np.asarray(doc["object_vertices"], dtype=float)

        return HOIReference(
            human=MotionClip(skeleton, root_pos, root_quat, joint_aa, fps),
            object=ObjectTrajectory(obj_pos, obj_quat, fps),
            contacts=ContactMask(contacts),
            object_geometry=vertices,
        )
    except MotionFileError:
        raise
    except (KeyError, TypeError, IndexError, ValueError, ValidationError) as e:
        raise MotionFileError(f"{path}: schema violation: {e}") from e


def _check_unit_quats(quats: np.ndarray, label: str) -> None:
    norms = np.linalg.norm(quats, axis=-1)
    bad = np.nonzero(np.abs(norms - 1.0) > QUAT_NORM_TOL)[0]
    if bad.size:
        raise MotionFileError(f"non-unit {label} quaternion at frame {int(bad[0])}")
