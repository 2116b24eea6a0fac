"""Seeded generation of the bundled demo reference clips.

Each demo runs a scripted closed-loop controller in the physics harness and
records the executed motion, so every bundled reference is feasible by
construction. Three clips ship: a two-hand carry while standing (dance
style), a two-hand carry through a vertical jump, and a one-hand carry with
forward hops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .motion import ContactMask, HOIReference, MotionClip, ObjectTrajectory
from .sim.config import ObjectSpec, SimModel, default_model
from .sim.harness import Simulator

DEMO_NAMES = ("carry_stand", "carry_jump", "one_hand_carry")

# foot-plant balance feedback: com offset, lean, pitch-rate damping, velocity
BALANCE_GAINS = (1.5, 1.5, 0.5, 0.0)

def _capture(v: float, gain: float, deadband: float = 0.25) -> float:
    """Velocity-proportional foot placement, active only beyond a deadband."""
    mag = abs(v) - deadband
    if mag <= 0.0:
        return 0.0
    return gain * np.sign(v) * mag



def _dof(model: SimModel, name: str, axis: int) -> int:
    return 3 * (model.skeleton.index(name) - 1) + axis


@dataclass
class PoseSpec:
    """Named-DoF pose; arms are fixed angles, root-relative IK, or grasp IK."""

    hip_dev: float = 0.0       # hip pitch beyond the straight-down stance
    knee: float = 0.0
    spine_y: float = 0.0
    chest_y: float = 0.0
    chest_z: float = 0.0
    arm_reach: tuple[float, float] | None = None  # hand target (x, z) relative to root
    arm_grasp: tuple[bool, bool] = (False, False)  # IK each hand to its grasp point
    shoulder_y: float = 0.6    # used when neither IK mode applies
    elbow_y: float = -0.9
    grip: tuple[float, float] = (0.0, 0.0)


class DemoController:
    """Keyframed pose schedule with IK arms and balance feedback."""

    def __init__(self, model: SimModel, keys: list[tuple[float, PoseSpec]],
                 obj_rest: np.ndarray, k_plant: float | None = None, k_lean: float | None = None,
                 k_damp: float | None = None, k_vel: float | None = None):
        self.model = model
        self.keys = keys
        self.obj_rest = np.asarray(obj_rest, dtype=float)
        self.k_plant = BALANCE_GAINS[0] if k_plant is None else k_plant
        self.k_lean = BALANCE_GAINS[1] if k_lean is None else k_lean
        self.k_damp = BALANCE_GAINS[2] if k_damp is None else k_damp
        self.k_vel = BALANCE_GAINS[3] if k_vel is None else k_vel
        sk = model.skeleton
        self._shoulders = (sk.index("l_shoulder"), sk.index("r_shoulder"))
        self._chest = sk.index("chest")
        self._feet = sorted(sk.foot_joints)
        self.upper_len = float(np.linalg.norm(sk.joints[sk.index("l_elbow")].local_offset))
        self.fore_len = float(
            np.linalg.norm(sk.joints[sk.index("l_wrist")].local_offset)
            + np.linalg.norm(sk.joints[sk.index("l_hand")].local_offset))
        self.reset()

    def reset(self) -> None:
        self._airborne = False
        self._landing_until = -1.0

    def act(self, state, goal, n: int) -> np.ndarray:
        m = self.model
        t = n * m.config.control_dt
        keys = self.keys
        if t <= keys[0][0]:
            action = self._build(keys[0][1], state)
        else:
            action = self._build(keys[-1][1], state)
            for (t0, p0), (t1, p1) in zip(keys[:-1], keys[1:]):
                if t0 <= t < t1:
                    s = 0.5 * (1.0 - np.cos(np.pi * (t - t0) / (t1 - t0)))
                    a0 = self._build(p0, state)
                    a1 = self._build(p1, state)
                    action = a0 + (a1 - a0) * s
                    break
        return self._landing_override(action, state, t)

    def _landing_override(self, action: np.ndarray, state, t: float) -> np.ndarray:
        """Touchdown-triggered leg absorption; superimposed on the schedule."""
        m = self.model
        foot_z = float(np.min(state.fk_pos[self._feet, 2]))
        if foot_z > 0.10:
            self._airborne = True
        # pre-position the stance on descent, before the feet actually touch
        if self._airborne and foot_z < 0.30 and state.root_vel[2] < -0.4:
            self._airborne = False
            self._landing_until = t + 0.45
        if t < self._landing_until:
            blend = 0.5 * (1.0 - np.cos(np.pi * (self._landing_until - t) / 0.45))
            absorb = PoseSpec(hip_dev=-0.25, knee=0.5)
            for side in "lr":
                for name, val in (("hip", np.pi / 2 + absorb.hip_dev), ("knee", absorb.knee),
                                  ("foot", -absorb.hip_dev - absorb.knee)):
                    i = _dof(m, f"{side}_{name}", 1)
                    action[i] = action[i] * (1.0 - blend) + val * blend
        return action

    def _build(self, spec: PoseSpec, state) -> np.ndarray:
        from .geometry import quat_rotate

        m = self.model
        q = np.zeros(m.d_body)

        # balance feedback shifts the feet under the loaded center of mass,
        # in both the sagittal (pitch) and lateral (roll) channels
        up = quat_rotate(state.root_quat, np.array([0.0, 0.0, 1.0]))
        held = bool(state.attached.any())
        total = m.harness.body_mass + (m.obj.mass if held else 0.0)
        com = (m.harness.body_mass * state.root_pos
               + (m.obj.mass * state.obj_pos if held else 0.0)) / total
        feet = state.fk_pos[self._feet]
        grounded = feet[:, 2] < 0.05
        hip_ff = (com[0] - state.root_pos[0]) / 0.9
        roll_ff = (com[1] - state.root_pos[1]) / 0.9
        if grounded.any():
            support = feet[grounded].mean(axis=0)
            plant_x = self.k_plant * (com[0] - support[0])
            plant_y = self.k_plant * (com[1] - support[1])
            lean_x = self.k_lean * up[0]
            lean_y = self.k_lean * up[1]
        else:
            # airborne: no support to step toward; compensate attitude so the
            # legs stay world-vertical and meet the ground at touchdown
            plant_x = plant_y = 0.0
            lean_x = -up[0]
            lean_y = -up[1]
        hip_corr = (plant_x + lean_x
                    + self.k_damp * state.root_angvel[1] + _capture(state.root_vel[0], self.k_vel))
        roll_corr = (plant_y + lean_y
                     - self.k_damp * state.root_angvel[0] + _capture(state.root_vel[1], self.k_vel))

        hip = spec.hip_dev - hip_ff - hip_corr
        for side in "lr":
            q[_dof(m, f"{side}_hip", 1)] = np.pi / 2 + hip
            q[_dof(m, f"{side}_hip", 0)] = roll_ff + roll_corr
            q[_dof(m, f"{side}_knee", 1)] = spec.knee
            q[_dof(m, f"{side}_foot", 1)] = -hip - spec.knee
        q[_dof(m, "spine", 1)] = spec.spine_y
        q[_dof(m, "chest", 1)] = spec.chest_y
        q[_dof(m, "chest", 2)] = spec.chest_z

        # IK works against the chest frame's current world pitch, so torso
        # lean and root tilt are compensated automatically
        chest_x = quat_rotate(state.fk_quat[self._chest], np.array([1.0, 0.0, 0.0]))
        torso_pitch = float(np.arctan2(-chest_x[2], chest_x[0]))
        grasp_world = state.obj_pos + quat_rotate(state.obj_quat, m.obj.grasp_points)
        for h, (side, sj) in enumerate(zip("lr", self._shoulders)):
            if spec.arm_grasp[h]:
                gi = min(h, grasp_world.shape[0] - 1)
                target = grasp_world[gi] + np.array([0.0, 0.0, 0.02])
                sh_y, el_y = self._arm_ik(state.fk_pos[sj], target, torso_pitch)
            elif spec.arm_reach is not None:
                target = state.root_pos + np.array([spec.arm_reach[0], 0.0, spec.arm_reach[1]])
                sh_y, el_y = self._arm_ik(state.fk_pos[sj], target, torso_pitch)
            else:
                sh_y, el_y = spec.shoulder_y, spec.elbow_y
            q[_dof(m, f"{side}_shoulder", 1)] = sh_y
            q[_dof(m, f"{side}_elbow", 1)] = el_y
            # level wrists: the hand frame (and any welded object) stays
            # upright while the arm curls
            q[_dof(m, f"{side}_wrist", 1)] = -(sh_y + el_y + spec.spine_y + spec.chest_y)

        return np.concatenate([q, np.asarray(spec.grip, dtype=float)])

    def _arm_ik(self, shoulder_world: np.ndarray, target_world: np.ndarray,
                torso_pitch: float) -> tuple[float, float]:
        """Planar two-link IK in the sagittal plane; elbow-up solution."""
        dx = target_world[0] - shoulder_world[0]
        dz = shoulder_world[2] - target_world[2]  # positive when the target is below
        d = max(np.hypot(dx, dz), 1e-6)
        l1, l2 = self.upper_len, self.fore_len
        d = min(d, l1 + l2 - 1e-4)
        phi = np.arctan2(dz, dx)
        alpha = np.arccos(np.clip((l1 * l1 + d * d - l2 * l2) / (2 * l1 * d), -1.0, 1.0))
        beta = np.arccos(np.clip((l1 * l1 + l2 * l2 - d * d) / (2 * l1 * l2), -1.0, 1.0))
        return phi + alpha - torso_pitch, -(np.pi - beta)


def _record(model: SimModel, controller: DemoController, obj_pos: np.ndarray,
            n_frames: int) -> HOIReference:
    sim = Simulator(model)
    sk = model.skeleton
    stand = controller.act  # pose at t=0 defines the start state
    q0_action = controller.act(_probe_state(sim, model, obj_pos), None, 0)
    state = sim.make_state(q0_action[:model.d_body], np.array([0.0, 0.0, 0.896]),
                           np.array([1.0, 0.0, 0.0, 0.0]), obj_pos,
                           np.array([1.0, 0.0, 0.0, 0.0]))
    roots, quats, qs, obj_p, obj_q, contacts = ([state.root_pos.copy()], [state.root_quat.copy()],
                                                [state.q.copy()], [state.obj_pos.copy()],
                                                [state.obj_quat.copy()], [state.attached.copy()])
    for n in range(n_frames - 1):
        action = controller.act(state, None, n)
        state = sim.step(state, action)
        roots.append(state.root_pos.copy())
        quats.append(state.root_quat.copy())
        qs.append(state.q.copy())
        obj_p.append(state.obj_pos.copy())
        obj_q.append(state.obj_quat.copy())
        contacts.append(state.attached.copy())
        if state.root_pos[2] < 0.35:
            raise ValidationError(f"demo controller fell at t={state.time:.2f}s")

    joint_aa = np.zeros((n_frames, sk.joint_count, 3))
    for i, qv in enumerate(qs):
        joint_aa[i, 1:sk.body_joint_count] = qv.reshape(-1, 3)
    fps = 1.0 / model.config.control_dt
    return HOIReference(
        human=MotionClip(sk, np.stack(roots), np.stack(quats), joint_aa, fps),
        object=ObjectTrajectory(np.stack(obj_p), np.stack(obj_q), fps),
        contacts=ContactMask(np.stack(contacts)),
        object_geometry=model.obj.vertices,
    )


def _probe_state(sim: Simulator, model: SimModel, obj_pos: np.ndarray):
    q = np.zeros(model.d_body)
    for side in "lr":
        q[_dof(model, f"{side}_hip", 1)] = np.pi / 2
    return sim.make_state(q, np.array([0.0, 0.0, 0.896]), np.array([1.0, 0.0, 0.0, 0.0]),
                          obj_pos, np.array([1.0, 0.0, 0.0, 0.0]))


def two_hand_object() -> ObjectSpec:
    """Tall crate grasped at standing hand height; no squat needed."""
    return ObjectSpec(half_extents=(0.12, 0.17, 0.45),
                      grasp_points=np.array([[0.0, 0.18, 0.33], [0.0, -0.18, 0.33]]),
                      density=80.0)


def one_hand_object() -> ObjectSpec:
    return ObjectSpec(half_extents=(0.10, 0.12, 0.40),
                      grasp_points=np.array([[0.0, 0.0, 0.41]]),
                      density=60.0)


CARRY_POSE = PoseSpec(arm_reach=(0.26, 0.10), grip=(1.0, 1.0))
REACH_OUT = PoseSpec(chest_y=0.25, knee=0.15, arm_grasp=(True, True))


def _pickup_keys(jitter) -> list[tuple[float, PoseSpec]]:
    """Shared reach-grab-settle prologue: contact starts near 1.5 s."""
    j = jitter
    grab = PoseSpec(**{**REACH_OUT.__dict__, "grip": (1.0, 1.0)})
    return [
        (0.0, PoseSpec()),
        (0.5 * j(0), PoseSpec()),
        (1.2 * j(1), REACH_OUT),
        (1.5, grab),
        (1.9, grab),
        (3.2 * j(2), CARRY_POSE),
    ]


def make_carry_stand(model: SimModel, seed: int = 0) -> HOIReference:
    rng = np.random.default_rng(seed)
    j = _jitter(rng)
    sway_l = PoseSpec(arm_reach=(0.26, 0.10), chest_z=0.22, knee=0.25, hip_dev=-0.12, grip=(1, 1))
    sway_r = PoseSpec(arm_reach=(0.26, 0.10), chest_z=-0.22, knee=0.25, hip_dev=-0.12, grip=(1, 1))
    keys = _pickup_keys(j) + [
        (4.5, sway_l), (5.5 * j(3), sway_r), (6.5, sway_l), (7.5 * j(4), sway_r),
        (8.5, CARRY_POSE), (10.0, CARRY_POSE),
    ]
    ctrl = DemoController(model, keys, obj_rest=np.array([0.34, 0.0, 0.451]))
    return _record(model, ctrl, np.array([0.34, 0.0, 0.451]), model.config.episode_length)


def make_carry_jump(model: SimModel, seed: int = 0) -> HOIReference:
    rng = np.random.default_rng(seed)
    j = _jitter(rng)
    crouch = PoseSpec(hip_dev=-0.45, knee=0.9, arm_reach=(0.26, 0.05), grip=(1, 1))
    extend = PoseSpec(hip_dev=-0.05, knee=0.04, arm_reach=(0.26, 0.10), grip=(1, 1))
    keys = _pickup_keys(j) + [
        (4.4, CARRY_POSE),
        (5.0 * j(3), crouch),
        (5.39, crouch),
        (5.57, extend),
        (5.87, extend),
        (7.2 * j(4), CARRY_POSE),
        (10.0, CARRY_POSE),
    ]
    ctrl = DemoController(model, keys, obj_rest=np.array([0.34, 0.0, 0.451]))
    return _record(model, ctrl, np.array([0.34, 0.0, 0.451]), model.config.episode_length)


def make_one_hand_carry(model: SimModel, seed: int = 0) -> HOIReference:
    rng = np.random.default_rng(seed)
    j = _jitter(rng)
    reach = PoseSpec(chest_y=0.2, knee=0.1, arm_grasp=(False, True),
                     shoulder_y=0.7, elbow_y=-0.8)
    grab = PoseSpec(**{**reach.__dict__, "grip": (0.0, 1.0)})
    carry = PoseSpec(arm_reach=(0.28, 0.10), grip=(0.0, 1.0))
    hop_crouch = PoseSpec(hip_dev=-0.35, knee=0.7, arm_reach=(0.28, 0.05), grip=(0, 1))
    hop_extend = PoseSpec(hip_dev=0.08, knee=0.02, arm_reach=(0.28, 0.10), grip=(0, 1))
    keys = [
        (0.0, PoseSpec()),
        (0.5 * j(0), PoseSpec()),
        (1.2 * j(1), reach),
        (1.5, grab),
        (1.9, grab),
        (3.2 * j(2), carry),
        (4.6, carry),
    ]
    t = 5.0
    for k in range(3):
        keys += [(t, hop_crouch), (t + 0.22, hop_extend), (t + 0.5, carry)]
        t += 1.1 * j(3 + k)
    keys += [(t + 0.6, carry), (10.0, carry)]
    ctrl = DemoController(model, keys, obj_rest=np.array([0.36, -0.18, 0.401]))
    return _record(model, ctrl, np.array([0.36, -0.18, 0.401]), model.config.episode_length)


def _jitter(rng: np.random.Generator):
    factors = rng.uniform(0.985, 1.015, 16)

    def j(i: int) -> float:
        return float(factors[i % 16])

    return j


def generate_demo(name: str, seed: int = 0) -> HOIReference:
    if name == "carry_stand":
        return make_carry_stand(default_model(obj=two_hand_object()), seed)
    if name == "carry_jump":
        return make_carry_jump(default_model(obj=two_hand_object()), seed)
    if name == "one_hand_carry":
        return make_one_hand_carry(default_model(obj=one_hand_object()), seed)
    raise ValidationError(f"unknown demo {name!r}; available: {DEMO_NAMES}")


def demo_model(name: str) -> SimModel:
    """Simulation model matching a demo clip's object."""
    if name == "one_hand_carry":
        return default_model(obj=one_hand_object())
    return default_model(obj=two_hand_object())
