"""Scripted expert policies with deliberately complementary skills.

Both experts are competent closed-loop body controllers. The dynamics expert
tracks reference body targets at full amplitude and balances well, but it is
object-blind: it commands no grip and its balance model ignores any carried
load. The interaction expert grips per the reference contact mask and
compensates for the load it carries, but tracks lower-body references through
a heavy lag, washing out dynamic leg motion.
"""
from __future__ import annotations

from typing import Protocol

import numpy as np

from ..geometry import quat_rotate
from ..motion import HOIReference
from .config import SimModel
from .harness import GoalFrame, SimState


class ExpertInterface(Protocol):
    action_dim: int
    covers_hands: bool

    def reset(self) -> None: ...

    def act(self, state: SimState, goal: GoalFrame, n: int) -> np.ndarray: ...


def leg_dof_indices(model: SimModel) -> np.ndarray:
    sk = model.skeleton
    idx = []
    for j in range(1, sk.body_joint_count):
        name = sk.joints[j].name
        if any(part in name for part in ("hip", "knee", "foot")):
            idx.extend(range(3 * (j - 1), 3 * (j - 1) + 3))
    return np.array(idx, dtype=int)


def arm_dof_indices(model: SimModel) -> np.ndarray:
    sk = model.skeleton
    idx = []
    for j in range(1, sk.body_joint_count):
        name = sk.joints[j].name
        if any(part in name for part in ("shoulder", "elbow", "wrist")):
            idx.extend(range(3 * (j - 1), 3 * (j - 1) + 3))
    return np.array(idx, dtype=int)


def _dof_index(model: SimModel, joint_name: str, axis: int) -> int:
    j = model.skeleton.index(joint_name)
    return 3 * (j - 1) + axis


def balance_terms(model: SimModel, state: SimState, foot_joints, object_aware: bool,
                  k_plant: float = 1.5, k_lean: float = 1.5, k_damp: float = 0.5):
    """Foot-plant corrections (pitch, roll) and the load offset along x.

    Plants the feet under the center of mass the controller believes in: an
    object-aware controller includes the welded load, an object-blind one does
    not. Airborne, the terms flip to attitude compensation so the legs meet
    the ground on touchdown.
    """
    hp = model.harness
    up = quat_rotate(state.root_quat, np.array([0.0, 0.0, 1.0]))
    held = object_aware and bool(state.attached.any())
    total = hp.body_mass + (model.obj.mass if held else 0.0)
    com = (hp.body_mass * state.root_pos
           + (model.obj.mass * state.obj_pos if held else 0.0)) / total

    feet = state.fk_pos[foot_joints]
    grounded = feet[:, 2] < 0.05
    offset_x = 0.0
    if grounded.any():
        support = feet[grounded].mean(axis=0)
        offset_x = com[0] - support[0]
        pitch = (k_plant * offset_x + k_lean * up[0] + k_damp * state.root_angvel[1])
        roll = (k_plant * (com[1] - support[1]) + k_lean * up[1] - k_damp * state.root_angvel[0])
    else:
        pitch = -up[0] + k_damp * state.root_angvel[1]
        roll = -up[1] - k_damp * state.root_angvel[0]
    pitch += (com[0] - state.root_pos[0]) / 0.9  # load feedforward
    roll += (com[1] - state.root_pos[1]) / 0.9
    return pitch, roll, offset_x


class _BalancedTracker:
    """Shared reference tracking with foot-plant balance feedback."""

    def __init__(self, model: SimModel, object_aware: bool):
        self.model = model
        self.object_aware = object_aware
        self._hip_y = [_dof_index(model, "l_hip", 1), _dof_index(model, "r_hip", 1)]
        self._hip_x = [_dof_index(model, "l_hip", 0), _dof_index(model, "r_hip", 0)]
        self._foot_y = [_dof_index(model, "l_foot", 1), _dof_index(model, "r_foot", 1)]
        self._foot_joints = sorted(model.skeleton.foot_joints)

    def apply_balance(self, body: np.ndarray, state: SimState) -> float:
        pitch, roll, offset_x = balance_terms(
            self.model, state, self._foot_joints, self.object_aware)
        for hy, fy in zip(self._hip_y, self._foot_y):
            body[hy] -= pitch
            body[fy] += pitch  # keep the foot blade level under the shift
        for hx in self._hip_x:
            body[hx] += roll
        return offset_x


class DynamicsExpert(_BalancedTracker):
    """Full-amplitude whole-body mimic; balances, but object-blind."""

    covers_hands = False

    def __init__(self, model: SimModel):
        super().__init__(model, object_aware=False)
        self.action_dim = model.d_body

    def reset(self) -> None:
        pass

    def act(self, state: SimState, goal: GoalFrame, n: int) -> np.ndarray:
        body = np.array(goal.q, copy=True)
        self.apply_balance(body, state)
        return body


class InteractionExpert(_BalancedTracker):
    """Contact-aware expert: grips, compensates load, lazy lower body."""

    covers_hands = True

    def __init__(self, model: SimModel, neutral_legs: np.ndarray,
                 leg_lag_s: float = 0.35, leg_shrink: float = 1.0, k_arm: float = 1.0):
        super().__init__(model, object_aware=True)
        self.action_dim = model.d_full
        self.legs = leg_dof_indices(model)
        self.neutral_legs = np.asarray(neutral_legs, dtype=float).copy()
        self.leg_lag_s = leg_lag_s
        self.leg_shrink = leg_shrink
        self.k_arm = k_arm
        self._shoulder_y = [_dof_index(model, "l_shoulder", 1), _dof_index(model, "r_shoulder", 1)]
        self._ema: np.ndarray | None = None

    def reset(self) -> None:
        self._ema = None

    def act(self, state: SimState, goal: GoalFrame, n: int) -> np.ndarray:
        m = self.model
        body = np.array(goal.q, copy=True)

        # lazy lower body: heavy lag (optionally shrunk) toward neutral stance
        if self._ema is None:
            self._ema = body[self.legs].copy()
        lam = 1.0 - np.exp(-m.config.control_dt / self.leg_lag_s)
        self._ema = self._ema + lam * (body[self.legs] - self._ema)
        body[self.legs] = self.neutral_legs + self.leg_shrink * (self._ema - self.neutral_legs)

        offset_x = self.apply_balance(body, state)
        for i in self._shoulder_y:
            body[i] += self.k_arm * offset_x  # pull the load in against lean

        grip = goal.contact.astype(float)
        return np.concatenate([body, grip])


def make_scripted_experts(reference: HOIReference, model: SimModel) -> tuple[DynamicsExpert, InteractionExpert]:
    sk = model.skeleton
    q0 = reference.human.joint_aa[0, 1:sk.body_joint_count].reshape(-1)
    neutral = q0[leg_dof_indices(model)]
    return DynamicsExpert(model), InteractionExpert(model, neutral)
