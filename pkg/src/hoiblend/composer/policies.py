"""Rollout policies: the eigenbasis composer, ablation baselines, experts.

Every policy maps (sim state, goal frame, step) to a full-dimensional action.
Hand actions always come from the interaction expert when one is present,
since the dynamics expert does not control hands.
"""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..sim.config import SimModel
from ..sim.experts import arm_dof_indices
from .blending import DeltaBuffer, EigenBasis, blend, update_basis
from .network import ComposerParams, composer_forward, mlp_forward


def build_observation(model: SimModel, state, goal, a_dyn: np.ndarray,
                      a_hoi: np.ndarray | None = None) -> np.ndarray:
    """Composer input: harness state, goal, and both experts' actions."""
    parts = [
        state.q,
        state.qd * 0.1,
        state.root_pos[2:3],
        state.root_quat,
        state.root_vel,
        state.root_angvel * 0.1,
        state.obj_pos - state.root_pos,
        state.obj_quat,
        state.obj_vel,
        state.attached.astype(float),
        goal.q,
        goal.root_pos - state.root_pos,
        goal.root_quat,
        goal.obj_pos - state.obj_pos,
        goal.obj_quat,
        goal.contact.astype(float),
    ]
    if a_dyn is not None:
        parts.append(a_dyn)
    if a_hoi is not None:
        parts.append(a_hoi)
    return np.concatenate(parts)


def observation_dim(model: SimModel, include_experts: bool = True) -> int:
    d = model.d_body
    base = d + d + 1 + 4 + 3 + 3 + 3 + 4 + 3 + model.d_hand
    goal = d + 3 + 4 + 3 + 4 + model.d_hand
    experts = (d + model.d_full) if include_experts else 0
    return base + goal + experts


def composer_step(params: ComposerParams, experts, state, goal, buffer: DeltaBuffer,
                  model: SimModel, n: int = 0):
    """One control step of the eigenbasis composer.

    Queries both frozen experts, pushes their body-action difference into the
    buffer, refreshes the PCA basis, runs the blend-coefficient network and
    resolves the final action. Returns (action, buffer, basis, output).
    """
    expert_dyn, expert_hoi = experts
    a_dyn = expert_dyn.act(state, goal, n)
    a_hoi = expert_hoi.act(state, goal, n)
    buffer.push(a_hoi[: model.d_body] - a_dyn)
    basis = update_basis(buffer, params.s) if params.s > 0 else EigenBasis.empty(model.d_body, 0)
    obs = build_observation(model, state, goal, a_dyn, a_hoi)
    heads = composer_forward(params, obs)
    out = blend(a_dyn, a_hoi, heads.w, heads.r, heads.mu, basis)
    return out.action, buffer, basis, out


class ComposerPolicy:
    """Trained blend of the two experts; s=0 disables basis exploration."""

    trainable = True

    def __init__(self, model: SimModel, experts, params: ComposerParams,
                 buffer_capacity: int = 16):
        self.model = model
        self.experts = experts
        self.params = params
        self.buffer_capacity = buffer_capacity
        self.buffer = DeltaBuffer(model.d_body, buffer_capacity)
        self.last_log = None

    def reset(self) -> None:
        self.buffer = DeltaBuffer(self.model.d_body, self.buffer_capacity)
        for e in self.experts:
            e.reset()
        self.last_log = None

    def act(self, state, goal, n: int) -> np.ndarray:
        action, self.buffer, basis, out = composer_step(
            self.params, self.experts, state, goal, self.buffer, self.model, n)
        self.last_log = {
            "w_mean": float(out.w.mean()),
            "w_min": float(out.w.min()),
            "w_max": float(out.w.max()),
            "r_norm": float(np.linalg.norm(out.r)),
            "mu_norm": float(np.linalg.norm(out.mu)),
            "expert": "",
        }
        return action

    def get_flat(self) -> np.ndarray:
        return self.params.flatten()

    def set_flat(self, flat: np.ndarray) -> None:
        self.params = self.params.with_flat(flat)


class SingleExpertPolicy:
    """Run one expert alone; missing hand coverage means zero grip."""

    trainable = False

    def __init__(self, model: SimModel, expert):
        self.model = model
        self.expert = expert
        self.last_log = None

    def reset(self) -> None:
        self.expert.reset()

    def act(self, state, goal, n: int) -> np.ndarray:
        a = self.expert.act(state, goal, n)
        if a.shape[0] == self.model.d_full:
            return a
        return np.concatenate([a, np.zeros(self.model.d_hand)])


class HeuristicPolicy:
    """Fixed partition of DoF between the experts (hands, or hands+arms)."""

    trainable = False

    def __init__(self, model: SimModel, experts, arms_from_hoi: bool):
        self.model = model
        self.experts = experts
        self.arm_dof = arm_dof_indices(model) if arms_from_hoi else np.array([], dtype=int)
        self.last_log = None

    def reset(self) -> None:
        for e in self.experts:
            e.reset()

    def act(self, state, goal, n: int) -> np.ndarray:
        a_dyn = self.experts[0].act(state, goal, n)
        a_hoi = self.experts[1].act(state, goal, n)
        body = a_dyn.copy()
        if self.arm_dof.size:
            body[self.arm_dof] = a_hoi[self.arm_dof]
        return np.concatenate([body, a_hoi[self.model.d_body:]])


class HardMoEPolicy:
    """Single expert per timestep (or per DoF), gated by a linear layer."""

    trainable = True

    def __init__(self, model: SimModel, experts, weights: np.ndarray | None = None,
                 per_joint: bool = False, seed: int = 0):
        self.model = model
        self.experts = experts
        self.per_joint = per_joint
        self.obs_dim = observation_dim(model)
        out = model.d_body if per_joint else 1
        if weights is None:
            weights = np.zeros(self.obs_dim * out + out)
        self.weights = np.asarray(weights, dtype=float)
        self.out = out
        self.last_log = None

    def reset(self) -> None:
        for e in self.experts:
            e.reset()

    def act(self, state, goal, n: int) -> np.ndarray:
        a_dyn = self.experts[0].act(state, goal, n)
        a_hoi = self.experts[1].act(state, goal, n)
        obs = build_observation(self.model, state, goal, a_dyn, a_hoi)
        w = self.weights[: self.obs_dim * self.out].reshape(self.out, self.obs_dim)
        b = self.weights[self.obs_dim * self.out:]
        logits = w @ obs + b
        pick_hoi = logits > 0.0
        body = np.where(
            pick_hoi if self.per_joint else pick_hoi[0],
            a_hoi[: self.model.d_body], a_dyn)
        self.last_log = {
            "w_mean": float(np.mean(pick_hoi)), "w_min": 0.0, "w_max": 1.0,
            "r_norm": 0.0, "mu_norm": 0.0,
            "expert": "hoi" if bool(np.mean(pick_hoi) > 0.5) else "dyn",
        }
        return np.concatenate([body, a_hoi[self.model.d_body:]])

    def get_flat(self) -> np.ndarray:
        return self.weights.copy()

    def set_flat(self, flat: np.ndarray) -> None:
        if flat.shape != self.weights.shape:
            raise ValidationError("gate parameter size mismatch")
        self.weights = np.asarray(flat, dtype=float).copy()


class ResidualPolicy:
    """Frozen full-coverage expert plus a bounded learned correction."""

    trainable = True

    def __init__(self, model: SimModel, experts, params: ComposerParams | None = None,
                 bound: float = 0.3):
        self.model = model
        self.experts = experts
        self.bound = bound
        if params is None:
            # plain MLP head emitting a correction over the full action
            params = ComposerParams.create(
                observation_dim(model, include_experts=False), model.d_body, s=0,
                hidden=(32,), rho=1.0, sigma=0.0, head_dim=model.d_full)
        self.params = params
        self.last_log = None

    def reset(self) -> None:
        for e in self.experts:
            e.reset()

    def act(self, state, goal, n: int) -> np.ndarray:
        a_hoi = self.experts[1].act(state, goal, n)
        obs = build_observation(self.model, state, goal, None, None)
        raw = mlp_forward(self.params, obs)
        return a_hoi + self.bound * np.tanh(raw)

    def get_flat(self) -> np.ndarray:
        return self.params.flatten()

    def set_flat(self, flat: np.ndarray) -> None:
        self.params = self.params.with_flat(flat)


class ScratchPolicy:
    """Direct MLP policy with no experts; actions from state and goal only."""

    trainable = True

    def __init__(self, model: SimModel, params: ComposerParams | None = None):
        self.model = model
        if params is None:
            params = ComposerParams.create(
                observation_dim(model, include_experts=False), model.d_body, s=0,
                hidden=(64,), rho=1.0, sigma=0.0, head_dim=model.d_full)
        self.params = params
        self.last_log = None

    def reset(self) -> None:
        pass

    def act(self, state, goal, n: int) -> np.ndarray:
        obs = build_observation(self.model, state, goal, None, None)
        raw = mlp_forward(self.params, obs)
        body = np.pi * np.tanh(raw[: self.model.d_body])
        grip = 1.0 / (1.0 + np.exp(-raw[self.model.d_body:]))
        return np.concatenate([body, grip])

    def get_flat(self) -> np.ndarray:
        return self.params.flatten()

    def set_flat(self, flat: np.ndarray) -> None:
        self.params = self.params.with_flat(flat)


class ReplayPolicy:
    """Feed the reference pose straight through as PD targets and grip."""

    trainable = False

    def __init__(self, model: SimModel):
        self.model = model
        self.last_log = None

    def reset(self) -> None:
        pass

    def act(self, state, goal, n: int) -> np.ndarray:
        return np.concatenate([goal.q, goal.contact.astype(float)])


class ZeroPolicy:
    trainable = False

    def __init__(self, model: SimModel):
        self.model = model
        self.last_log = None

    def reset(self) -> None:
        pass

    def act(self, state, goal, n: int) -> np.ndarray:
        return np.zeros(self.model.d_full)


BLEND_MODES = (
    "mlp_pca", "mlp", "hard_moe", "hard_moe_joint", "heuristic_hand",
    "heuristic_arm", "residual", "expert_phc", "expert_im", "scratch",
)


def make_policy(mode: str, model: SimModel, experts, params: ComposerParams | None = None,
                seed: int = 0):
    """Instantiate a rollout policy for one of the named blend modes.

    The expert_phc mode runs the body-dynamics expert alone; expert_im runs
    the interaction expert alone.
    """
    dyn, hoi = experts
    if mode == "mlp_pca":
        p = params or default_composer_params(model, s=4, seed=seed)
        return ComposerPolicy(model, experts, p)
    if mode == "mlp":
        p = params or default_composer_params(model, s=0, seed=seed)
        return ComposerPolicy(model, experts, p)
    if mode == "hard_moe":
        pol = HardMoEPolicy(model, experts, per_joint=False)
        if params is not None:
            pol.set_flat(params.flatten())
        return pol
    if mode == "hard_moe_joint":
        pol = HardMoEPolicy(model, experts, per_joint=True)
        if params is not None:
            pol.set_flat(params.flatten())
        return pol
    if mode == "heuristic_hand":
        return HeuristicPolicy(model, experts, arms_from_hoi=False)
    if mode == "heuristic_arm":
        return HeuristicPolicy(model, experts, arms_from_hoi=True)
    if mode == "residual":
        pol = ResidualPolicy(model, experts)
        if params is not None:
            pol.params = params
        return pol
    if mode == "expert_phc":
        return SingleExpertPolicy(model, dyn)
    if mode == "expert_im":
        return SingleExpertPolicy(model, hoi)
    if mode == "scratch":
        pol = ScratchPolicy(model)
        if params is not None:
            pol.params = params
        return pol
    raise ValidationError(f"unknown blend mode {mode!r}; available: {BLEND_MODES}")


def default_composer_params(model: SimModel, s: int = 4, hidden: tuple[int, ...] = (32, 32),
                            seed: int = 0) -> ComposerParams:
    return ComposerParams.create(observation_dim(model), model.d_body, s=s,
                                 hidden=hidden, seed=seed)
