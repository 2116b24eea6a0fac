"""Imitation reward: exponential tracking terms plus a contact bonus."""
from __future__ import annotations

import numpy as np

from .config import SimModel
from .harness import GoalFrame, SimState


def imitation_reward(state: SimState, goal: GoalFrame, model: SimModel) -> float:
    """exp(-a_j * mean joint error^2) + exp(-a_o * object error^2) + bonus.

    The bonus rewards maintaining the goal's contact: full when the goal has
    no contact to maintain or when the object is held while the goal expects
    contact, zero when the goal expects contact and it was lost.
    """
    w = model.reward
    nb = model.skeleton.body_joint_count
    joint_err = state.fk_pos[:nb] - goal.joint_pos[:nb]
    mean_sq = float(np.mean(np.sum(joint_err * joint_err, axis=1)))
    obj_sq = float(np.sum((state.obj_pos - goal.obj_pos) ** 2))

    goal_contact = bool(goal.contact.any())
    held = bool(state.attached.any())
    bonus = w.contact_bonus if (not goal_contact or held) else 0.0
    return float(np.exp(-w.alpha_joint * mean_sq) + np.exp(-w.alpha_object * obj_sq) + bonus)
