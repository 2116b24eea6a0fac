"""Quaternion, axis-angle and rigid-transform math.

Conventions: quaternions are (w, x, y, z) with unit norm, rotations are
right-handed, lengths in meters, angles in radians. Batched helpers accept
arrays whose last axis is the component axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b (apply b first, then a)."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] = -out[..., 1:]
    return out


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion(s) q."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv = q[..., 1:]
    uv = np.cross(qv, v)
    uuv = np.cross(qv, uv)
    return v + 2.0 * (q[..., :1] * uv + uuv)


def quat_from_axis_angle(rotvec: np.ndarray) -> np.ndarray:
    """Exponential map: axis-angle 3-vector(s) to unit quaternion(s)."""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(x)/x via series near zero to stay smooth and exact at 0
    small = angle < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(small, 0.5 - angle**2 / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    w = np.cos(half)
    xyz = rotvec * k
    return np.concatenate([w, xyz], axis=-1)


def quat_to_axis_angle(q: np.ndarray) -> np.ndarray:
    """Log map: unit quaternion(s) to axis-angle 3-vector(s) with angle in [0, pi]."""
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., :1] < 0.0, -q, q)  # canonical hemisphere
    sin_half = np.linalg.norm(q[..., 1:], axis=-1, keepdims=True)
    cos_half = np.clip(q[..., :1], -1.0, 1.0)
    angle = 2.0 * np.arctan2(sin_half, cos_half)
    small = sin_half < 1e-9
    scale = np.where(small, 2.0, angle / np.where(small, 1.0, sin_half))
    return q[..., 1:] * scale


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (yy + zz)
    m[..., 0, 1] = 2 * (xy - wz)
    m[..., 0, 2] = 2 * (xz + wy)
    m[..., 1, 0] = 2 * (xy + wz)
    m[..., 1, 1] = 1 - 2 * (xx + zz)
    m[..., 1, 2] = 2 * (yz - wx)
    m[..., 2, 0] = 2 * (xz - wy)
    m[..., 2, 1] = 2 * (yz + wx)
    m[..., 2, 2] = 1 - 2 * (xx + yy)
    return m


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Rotation matrix to quaternion, numerically safe for all traces."""
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    return quat_normalize(q)


def quat_geodesic_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle in [0, pi] between two unit quaternions."""
    d = abs(float(np.dot(np.asarray(a), np.asarray(b))))
    return 2.0 * np.arccos(min(1.0, d))


def check_rotation_matrix(m: np.ndarray, tol: float = 1e-6) -> None:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValidationError(f"rotation must be 3x3, got {m.shape}")
    if not np.allclose(m.T @ m, np.eye(3), atol=tol):
        raise ValidationError("rotation matrix is not orthonormal")
    if abs(np.linalg.det(m) - 1.0) > tol:
        raise ValidationError("rotation matrix determinant is not +1")


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: rotation (unit quaternion) followed by translation."""

    rotation: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        if self.rotation.shape != (4,):
            raise ValidationError(f"rotation quaternion must have shape (4,), got {self.rotation.shape}")
        if self.translation.shape != (3,):
            raise ValidationError(f"translation must have shape (3,), got {self.translation.shape}")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, rotation: np.ndarray, translation: np.ndarray, tol: float = 1e-6) -> "RigidTransform":
        check_rotation_matrix(rotation, tol=tol)
        return cls(matrix_to_quat(rotation), np.asarray(translation, dtype=float))

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other: apply `other` first, then `self`."""
        return RigidTransform(
            quat_normalize(quat_multiply(self.rotation, other.rotation)),
            self.translation + quat_rotate(self.rotation, other.translation),
        )

    def invert(self) -> "RigidTransform":
        qc = quat_conjugate(self.rotation)
        return RigidTransform(qc, -quat_rotate(qc, self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return quat_rotate(self.rotation, np.asarray(points, dtype=float)) + self.translation


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def invert(a: RigidTransform) -> RigidTransform:
    return a.invert()


def transform_points(a: RigidTransform, pts: np.ndarray) -> np.ndarray:
    return a.apply(pts)


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)
