"""Desk-scale dynamic human-object interaction: planning, alignment, blending."""

__version__ = "0.1.0"

from .geometry import RigidTransform, compose, invert, transform_points
from .motion import ContactMask, HOIReference, MotionClip, ObjectTrajectory, PoseFrame
from .motionfile import load_clip, save_clip
from .skeleton import SkeletonSpec, default_skeleton

__all__ = [
    "ContactMask",
    "HOIReference",
    "MotionClip",
    "ObjectTrajectory",
    "PoseFrame",
    "RigidTransform",
    "SkeletonSpec",
    "compose",
    "default_skeleton",
    "invert",
    "load_clip",
    "save_clip",
    "transform_points",
]
