"""Interaction-consistent inpainting over a pluggable denoiser.

The sampling loop runs a denoiser on an (N, D) motion feature tensor and
re-imposes reference values after every step: full rows before the
interaction onset, frozen interaction-joint rotations after it. The root
trajectory is imputed from the reference before onset and left to the
denoiser afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .errors import ConfigurationError, NoInteractionError, ValidationError
from .motion import (
    ContactMask,
    HOIReference,
    MotionClip,
    clip_to_features,
    feature_dim,
    features_to_clip,
)


class DenoiserInterface(Protocol):
    """Behavioral seam for the generative motion prior."""

    num_steps: int

    def step(self, noisy: np.ndarray, condition: Any, k: int) -> np.ndarray:
        """One denoising step at schedule index k; output shape equals input."""
        ...


def detect_onset(contacts: ContactMask, fps: float, delay_s: float = 1.5) -> int:
    """First any-hand contact frame plus a fixed delay, clamped into the clip."""
    if len(contacts) == 0:
        raise ValidationError("contact mask is empty")
    hits = np.nonzero(contacts.any_contact)[0]
    if hits.size == 0:
        raise NoInteractionError("no hand-object contact anywhere in the clip")
    onset = int(hits[0]) + int(round(delay_s * fps))
    return min(onset, len(contacts) - 1)


@dataclass(frozen=True)
class InpaintingPlan:
    reference: HOIReference
    onset_frame: int
    interaction_joints: frozenset[int]
    onset_delay_s: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "interaction_joints", frozenset(self.interaction_joints))
        n = len(self.reference)
        if not (0 <= self.onset_frame < n):
            raise ValidationError(f"onset frame {self.onset_frame} outside clip of length {n}")
        nj = self.reference.skeleton.joint_count
        if any(not (0 <= j < nj) for j in self.interaction_joints):
            raise ValidationError("interaction joint index out of range")

    @classmethod
    def from_reference(cls, reference: HOIReference, delay_s: float = 1.5,
                       interaction_joints=None) -> "InpaintingPlan":
        if interaction_joints is None:
            interaction_joints = reference.skeleton.interaction_joints
        onset = detect_onset(reference.contacts, reference.fps, delay_s)
        return cls(reference, onset, frozenset(interaction_joints), delay_s)


def inpaint_pose(denoised: MotionClip, plan: InpaintingPlan) -> MotionClip:
    """Impute reference poses into a denoised clip, case by case.

    Before onset every joint (and the root) comes from the reference; from
    onset on, interaction joints are frozen at their onset reference value
    while the rest, root included, keep the denoised estimate.
    """
    ref = plan.reference.human
    if len(denoised) != len(ref):
        raise ValidationError(f"denoised clip has {len(denoised)} frames, reference has {len(ref)}")
    if denoised.skeleton.joint_count != ref.skeleton.joint_count:
        raise ValidationError("denoised clip and reference disagree on joint count")

    n_onset = plan.onset_frame
    root_pos = np.array(denoised.root_pos, copy=True)
    root_quat = np.array(denoised.root_quat, copy=True)
    joint_aa = np.array(denoised.joint_aa, copy=True)

    root_pos[:n_onset] = ref.root_pos[:n_onset]
    root_quat[:n_onset] = ref.root_quat[:n_onset]
    joint_aa[:n_onset] = ref.joint_aa[:n_onset]
    if plan.interaction_joints:
        idx = sorted(plan.interaction_joints)
        joint_aa[n_onset:, idx] = ref.joint_aa[n_onset, idx]
    return MotionClip(denoised.skeleton, root_pos, root_quat, joint_aa, denoised.fps)


def inpaint_features(features: np.ndarray, plan: InpaintingPlan,
                     ref_features: np.ndarray | None = None) -> np.ndarray:
    """Tensor-space form of the imputation used inside the sampling loop."""
    ref = plan.reference.human
    if ref_features is None:
        ref_features = clip_to_features(ref)
    if features.shape != ref_features.shape:
        raise ValidationError(f"feature shape {features.shape} does not match reference {ref_features.shape}")
    out = np.array(features, copy=True)
    n_onset = plan.onset_frame
    out[:n_onset] = ref_features[:n_onset]
    if plan.interaction_joints:
        for j in sorted(plan.interaction_joints):
            s = 6 + 3 * j
            out[n_onset:, s:s + 3] = ref_features[n_onset, s:s + 3]
    return out


def sample_with_inpainting(denoiser: DenoiserInterface, plan: InpaintingPlan,
                           condition: Any = None, seed: int = 0) -> MotionClip:
    """Run the full denoise-then-impute loop from seeded noise."""
    if denoiser.num_steps < 1:
        raise ConfigurationError("denoiser schedule must have at least one step")
    ref = plan.reference.human
    n, d = len(ref), feature_dim(ref.skeleton)
    ref_features = clip_to_features(ref)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    for k in range(denoiser.num_steps, 0, -1):
        est = denoiser.step(x, condition, k)
        est = np.asarray(est, dtype=float)
        if est.shape != x.shape:
            raise ValidationError(f"denoiser output shape {est.shape} does not match input {x.shape}")
        x = inpaint_features(est, plan, ref_features)
    # re-impose the constraints at clip level so they hold bit-exactly
    return inpaint_pose(features_to_clip(x, ref.skeleton, ref.fps), plan)


class ToyDenoiser:
    """Library-pull denoiser standing in for a learned motion prior.

    Each step moves the input a scheduled fraction toward the temporally
    smoothed frame-wise nearest library clip. Stateless and deterministic;
    the conditioning token is ignored.
    """

    def __init__(self, library_features: list[np.ndarray], smoothing: int, num_steps: int, seed: int):
        self.library = library_features
        self.smoothing = int(smoothing)
        self.num_steps = int(num_steps)
        self.seed = int(seed)

    def step(self, noisy: np.ndarray, condition: Any, k: int) -> np.ndarray:
        target = self._nearest_blend(np.asarray(noisy, dtype=float))
        if self.smoothing > 0:
            target = _box_smooth(target, self.smoothing)
        gamma = (self.num_steps - k + 1) / self.num_steps
        return noisy + gamma * (target - noisy)

    def _nearest_blend(self, x: np.ndarray) -> np.ndarray:
        lib = [_resample(f, x.shape[0]) for f in self.library]
        if len(lib) == 1:
            return lib[0]
        stack = np.stack(lib)  # (C, N, D)
        dist = np.linalg.norm(stack - x[None], axis=2)  # (C, N)
        choice = np.argmin(dist, axis=0)
        return stack[choice, np.arange(x.shape[0])]


def make_toy_denoiser(reference_library: list[MotionClip], smoothing: int = 2,
                      num_steps: int = 50, seed: int = 0) -> ToyDenoiser:
    if not reference_library:
        raise ConfigurationError("toy denoiser needs a non-empty reference library")
    feats = [clip_to_features(c) for c in reference_library]
    d = feats[0].shape[1]
    if any(f.shape[1] != d for f in feats):
        raise ConfigurationError("library clips disagree on feature dimension")
    return ToyDenoiser(feats, smoothing, num_steps, seed)


def _resample(features: np.ndarray, n: int) -> np.ndarray:
    m = features.shape[0]
    if m == n:
        return features
    xs = np.linspace(0.0, m - 1.0, n)
    lo = np.floor(xs).astype(int)
    hi = np.minimum(lo + 1, m - 1)
    w = (xs - lo)[:, None]
    return features[lo] * (1.0 - w) + features[hi] * w


def _box_smooth(x: np.ndarray, radius: int) -> np.ndarray:
    n = x.shape[0]
    pad = np.concatenate([x[radius:0:-1], x, x[-2:-2 - radius:-1]], axis=0) if n > 1 else x
    if pad.shape[0] < 2 * radius + 1:
        return x
    kernel = np.ones(2 * radius + 1) / (2 * radius + 1)
    out = np.empty_like(x)
    for c in range(x.shape[1]):
        out[:, c] = np.convolve(pad[:, c], kernel, mode="valid")
    return out


@dataclass(frozen=True)
class PlanResult:
    planned: HOIReference
    onset_frame: int


def plan_reference(reference: HOIReference, library: list[MotionClip], *,
                   delay_s: float = 1.5, interaction_joints=None, steps: int = 50,
                   smoothing: int = 2, seed: int = 0) -> PlanResult:
    """Plan a dynamic human motion constrained to the reference interaction.

    The returned reference keeps the source object trajectory and contact
    mask; trajectory recovery is a separate alignment pass.
    """
    plan = InpaintingPlan.from_reference(reference, delay_s, interaction_joints)
    denoiser = make_toy_denoiser(library, smoothing=smoothing, num_steps=steps, seed=seed)
    planned_clip = sample_with_inpainting(denoiser, plan, condition=None, seed=seed)
    out = HOIReference(
        human=planned_clip,
        object=reference.object,
        contacts=reference.contacts,
        object_geometry=reference.object_geometry,
    )
    return PlanResult(out, plan.onset_frame)
