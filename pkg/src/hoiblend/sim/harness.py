"""Deterministic reduced-physics rollout environment.

The body is an articulated chain whose joints follow decoupled PD dynamics;
all mass sits on the free 6-DoF root, which is supported by penalty-spring
ground contacts at the feet (heel/toe) and a pelvis sphere. Grasping is an
attach-style weld: while gripped, the object is rigidly fixed to the holding
hand and its weight loads the root. Linear positions integrate with the exact
constant-acceleration update so ballistic motion is integrator-exact;
velocities and joint states use semi-implicit Euler.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SimulationDivergedError, ValidationError
from ..fk import fk_arrays
from ..geometry import (
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    quat_rotate,
)
from ..motion import ContactMask, HOIReference, MotionClip, ObjectTrajectory
from .config import SimModel


@dataclass(frozen=True)
class SimState:
    q: np.ndarray          # (d_body,) joint angles
    qd: np.ndarray         # (d_body,) joint angular velocities
    grip: np.ndarray       # (hands,) current grip activation
    root_pos: np.ndarray
    root_quat: np.ndarray
    root_vel: np.ndarray
    root_angvel: np.ndarray
    obj_pos: np.ndarray
    obj_quat: np.ndarray
    obj_vel: np.ndarray
    obj_angvel: np.ndarray
    attached: np.ndarray   # (hands,) bool contact flags
    primary_hand: int      # welded hand index, -1 when free
    weld_quat: np.ndarray  # hand-local object orientation while welded
    weld_pos: np.ndarray   # hand-local object position while welded
    contact_prev: np.ndarray  # (K, 3) previous contact points, root-local
    fk_pos: np.ndarray     # (J, 3) cached world joint positions
    fk_quat: np.ndarray    # (J, 4) cached world joint orientations
    step_index: int = 0
    time: float = 0.0

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qd))
            and np.all(np.isfinite(self.root_pos)) and np.all(np.isfinite(self.root_vel))
            and np.all(np.isfinite(self.obj_pos)) and np.all(np.isfinite(self.obj_vel))
            and np.all(np.isfinite(self.root_angvel)) and np.all(np.isfinite(self.obj_angvel))
        )


@dataclass
class _ContactLayout:
    """Fixed body contact points: (joint index, local offset, radius)."""

    joints: np.ndarray
    offsets: np.ndarray
    radii: np.ndarray

    @classmethod
    def build(cls, model: SimModel) -> "_ContactLayout":
        sk = model.skeleton
        hp = model.harness
        feet = sorted(sk.foot_joints)
        joints = [sk.pelvis_joint]
        offsets = [(0.0, 0.0, 0.0)]
        radii = [hp.pelvis_radius]
        for f in feet:
            for off in (hp.foot_heel_offset, hp.foot_toe_offset):
                joints.append(f)
                offsets.append(off)
                radii.append(0.0)
        return cls(np.array(joints), np.array(offsets, dtype=float), np.array(radii))

    def world_points(self, fk_pos: np.ndarray, fk_quat: np.ndarray) -> np.ndarray:
        return fk_pos[self.joints] + quat_rotate(fk_quat[self.joints], self.offsets)


class Simulator:
    """Stepping logic bound to one model; use one instance per rollout."""

    def __init__(self, model: SimModel):
        self.model = model
        self.contacts = _ContactLayout.build(model)
        self.rom_lo, self.rom_hi = model.rom.dof_limits(model.skeleton).T
        self.gravity = np.array([0.0, 0.0, -model.config.gravity])
        self.joint_aa_buf = np.zeros((model.skeleton.joint_count, 3))
        self.hand_joints = model.skeleton.hand_joints

    # -- state construction --------------------------------------------------

    def make_state(self, q: np.ndarray, root_pos, root_quat, obj_pos, obj_quat,
                   qd=None, root_vel=None, grip=None) -> SimState:
        m = self.model
        q = np.asarray(q, dtype=float)
        fk_pos, fk_quat = self._fk(q, np.asarray(root_pos, dtype=float),
                                   quat_normalize(np.asarray(root_quat, dtype=float)))
        state = SimState(
            q=q,
            qd=np.zeros(m.d_body) if qd is None else np.asarray(qd, dtype=float),
            grip=np.zeros(m.d_hand) if grip is None else np.asarray(grip, dtype=float),
            root_pos=np.asarray(root_pos, dtype=float),
            root_quat=quat_normalize(np.asarray(root_quat, dtype=float)),
            root_vel=np.zeros(3) if root_vel is None else np.asarray(root_vel, dtype=float),
            root_angvel=np.zeros(3),
            obj_pos=np.asarray(obj_pos, dtype=float),
            obj_quat=quat_normalize(np.asarray(obj_quat, dtype=float)),
            obj_vel=np.zeros(3),
            obj_angvel=np.zeros(3),
            attached=np.zeros(m.d_hand, dtype=bool),
            primary_hand=-1,
            weld_quat=np.array([1.0, 0.0, 0.0, 0.0]),
            weld_pos=np.zeros(3),
            contact_prev=quat_rotate(
                quat_conjugate(np.asarray(root_quat, dtype=float)),
                self.contacts.world_points(fk_pos, fk_quat) - np.asarray(root_pos, dtype=float)),
            fk_pos=fk_pos,
            fk_quat=fk_quat,
        )
        return state

    def _fk(self, q: np.ndarray, root_pos: np.ndarray, root_quat: np.ndarray):
        sk = self.model.skeleton
        aa = self.joint_aa_buf
        aa[1:sk.body_joint_count] = q.reshape(-1, 3)
        return fk_arrays(sk, root_pos, root_quat, aa)

    # -- stepping -------------------------------------------------------------

    def step(self, state: SimState, action: np.ndarray) -> SimState:
        m = self.model
        hp = m.harness
        cfg = m.config
        action = np.asarray(action, dtype=float)
        if action.shape != (m.d_full,):
            raise ValidationError(f"action has shape {action.shape}, expected ({m.d_full},)")

        # commanded PD targets never leave the range-of-motion limits
        targets = np.clip(action[:m.d_body], self.rom_lo, self.rom_hi)
        grip = np.clip(action[m.d_body:], 0.0, 1.0)

        q = state.q.copy()
        qd = state.qd.copy()
        root_pos = state.root_pos.copy()
        root_quat = state.root_quat.copy()
        root_vel = state.root_vel.copy()
        root_angvel = state.root_angvel.copy()
        obj_pos = state.obj_pos.copy()
        obj_quat = state.obj_quat.copy()
        obj_vel = state.obj_vel.copy()
        obj_angvel = state.obj_angvel.copy()
        attached = state.attached.copy()
        primary = state.primary_hand
        weld_quat = state.weld_quat.copy()
        weld_pos = state.weld_pos.copy()
        contact_prev = state.contact_prev.copy()

        dt = cfg.sim_dt
        kp, kd = m.gains.kp, m.gains.kd
        tau_lim = hp.torque_limit_body
        inv_inertia = 1.0 / hp.joint_inertia
        mass = hp.body_mass
        obj_mass = m.obj.mass
        obj_inertia = m.obj.inertia
        # object contact coefficients scale with its mass so the contact
        # frequency stays integrator-stable for any object size
        obj_kn = 306.0 * obj_mass
        obj_cn = 14.0 * obj_mass
        obj_kt = 8.0 * obj_mass
        root_inertia = np.asarray(hp.root_inertia)
        verts_local = m.obj.vertices
        grasp_local = m.obj.grasp_points

        for _ in range(cfg.substeps):
            # joints: decoupled PD second-order dynamics
            tau = np.clip(kp * (targets - q) - kd * qd, -tau_lim, tau_lim)
            qd = qd + dt * tau * inv_inertia
            q = q + dt * qd

            fk_pos, fk_quat = self._fk(q, root_pos, root_quat)

            # weld: object rigidly follows the holding hand
            if primary >= 0:
                hj = self.hand_joints[primary]
                new_pos = fk_pos[hj] + quat_rotate(fk_quat[hj], weld_pos)
                new_quat = quat_normalize(quat_multiply(fk_quat[hj], weld_quat))
                obj_vel = (new_pos - obj_pos) / dt
                obj_pos, obj_quat = new_pos, new_quat

            # while welded, body and object form one rigid system: gravity
            # acts at the combined center of mass (no torque from carrying in
            # flight) and contacts take their lever arms to that point
            if primary >= 0:
                sys_mass = mass + obj_mass
                com = (mass * root_pos + obj_mass * obj_pos) / sys_mass
                d_root = root_pos - com
                d_obj = obj_pos - com
                inertia = root_inertia + mass * (d_root @ d_root) + obj_mass * (d_obj @ d_obj)
            else:
                sys_mass = mass
                com = root_pos
                inertia = root_inertia

            force = sys_mass * self.gravity
            torque = -hp.angular_damping * root_angvel

            # ground contacts on the body; point velocity = analytic root part
            # plus the joint-driven part, finite-differenced in the root frame
            pts = self.contacts.world_points(fk_pos, fk_quat)
            rel = pts - root_pos
            inv_root = quat_conjugate(root_quat)
            pts_local = quat_rotate(inv_root, rel)
            v_joint = quat_rotate(root_quat, (pts_local - contact_prev) / dt)
            contact_prev = pts_local
            vels = root_vel + np.cross(root_angvel, rel) + v_joint
            pen = self.contacts.radii - pts[:, 2]
            for i in np.nonzero(pen > 0.0)[0]:
                f = self._contact_force(pen[i], vels[i], hard=i == 0)
                force += f
                # friction skips the pitch/roll torque channel: the explicit
                # lever coupling at leg length is unstable at the sim rate
                lever = pts[i] - com
                tq = np.cross(lever, np.array([0.0, 0.0, f[2]]))
                tq[2] += lever[0] * f[1] - lever[1] * f[0]
                torque += tq

            if primary >= 0:
                # ground reaction on the carried object feeds the same system
                verts = obj_pos + quat_rotate(obj_quat, verts_local)
                vert_pen = -verts[:, 2]
                for i in np.nonzero(vert_pen > 0.0)[0]:
                    f = self._object_contact_force(vert_pen[i], obj_vel, obj_kn, obj_cn, obj_kt)
                    force += f
                    torque += np.cross(verts[i] - com, f)
            else:
                # free rigid object under gravity and vertex ground contacts
                f_o = obj_mass * self.gravity
                t_o = -0.2 * obj_angvel
                verts = obj_pos + quat_rotate(obj_quat, verts_local)
                vert_pen = -verts[:, 2]
                for i in np.nonzero(vert_pen > 0.0)[0]:
                    v_pt = obj_vel + np.cross(obj_angvel, verts[i] - obj_pos)
                    f = self._object_contact_force(vert_pen[i], v_pt, obj_kn, obj_cn, obj_kt)
                    f_o += f
                    t_o += np.cross(verts[i] - obj_pos, f)
                acc_o = f_o / obj_mass
                obj_pos = obj_pos + obj_vel * dt + 0.5 * acc_o * dt * dt
                obj_vel = obj_vel + acc_o * dt
                obj_angvel = obj_angvel + dt * t_o / obj_inertia
                obj_quat = quat_normalize(quat_multiply(quat_from_axis_angle(obj_angvel * dt), obj_quat))

            # root carries the system state: exact constant-acceleration
            # position update, then semi-implicit velocity and rotation
            acc = force / sys_mass
            root_pos = root_pos + root_vel * dt + 0.5 * acc * dt * dt
            root_vel = root_vel + acc * dt
            root_angvel = root_angvel + dt * torque / inertia
            root_quat = quat_normalize(quat_multiply(quat_from_axis_angle(root_angvel * dt), root_quat))

            # attach / detach bookkeeping with the fresh hand poses
            primary, attached, weld_quat, weld_pos = self._update_attach(
                grip, fk_pos, fk_quat, obj_pos, obj_quat, primary, attached, weld_quat, weld_pos)

        fk_pos, fk_quat = self._fk(q, root_pos, root_quat)
        if primary >= 0:
            hj = self.hand_joints[primary]
            new_pos = fk_pos[hj] + quat_rotate(fk_quat[hj], weld_pos)
            obj_vel = (new_pos - obj_pos) / dt
            obj_pos = new_pos
            obj_quat = quat_normalize(quat_multiply(fk_quat[hj], weld_quat))
            obj_angvel = np.zeros(3)

        out = SimState(
            q=q, qd=qd, grip=grip,
            root_pos=root_pos, root_quat=root_quat, root_vel=root_vel, root_angvel=root_angvel,
            obj_pos=obj_pos, obj_quat=obj_quat, obj_vel=obj_vel, obj_angvel=obj_angvel,
            attached=attached, primary_hand=primary, weld_quat=weld_quat, weld_pos=weld_pos,
            contact_prev=contact_prev, fk_pos=fk_pos, fk_quat=fk_quat,
            step_index=state.step_index + 1, time=state.time + cfg.control_dt,
        )
        if not out.is_finite():
            raise SimulationDivergedError(out.step_index)
        return out

    def _contact_force(self, penetration: float, velocity: np.ndarray, scale: float = 1.0,
                       cap: bool = True, hard: bool = False) -> np.ndarray:
        hp = self.model.harness
        fn = hp.ground_kn * scale * penetration - hp.ground_cn * scale * velocity[2]
        fn = max(fn, 0.0)
        if cap:
            # bounds the thrust position-driven legs can transmit
            fn = min(fn, hp.contact_force_max)
        if hard:
            # uncapped floor beyond 5 cm penetration prevents tunneling
            fn += hp.ground_kn * max(0.0, penetration - 0.05)
        vt = velocity[:2]
        speed = float(np.hypot(vt[0], vt[1]))
        ft_mag = min(hp.ground_kt * speed, self.model.config.ground_friction * fn)
        f = np.array([0.0, 0.0, fn])
        if speed > 1e-9:
            f[:2] = -ft_mag * vt / speed
        return f

    def _object_contact_force(self, penetration, velocity, kn, cn, kt) -> np.ndarray:
        hp = self.model.harness
        fn = max(kn * penetration - cn * velocity[2], 0.0)
        fn += hp.ground_kn * max(0.0, penetration - 0.05)
        vt = velocity[:2]
        speed = float(np.hypot(vt[0], vt[1]))
        ft_mag = min(kt * speed, self.model.config.ground_friction * fn)
        f = np.array([0.0, 0.0, fn])
        if speed > 1e-9:
            f[:2] = -ft_mag * vt / speed
        return f

    def _update_attach(self, grip, fk_pos, fk_quat, obj_pos, obj_quat,
                       primary, attached, weld_quat, weld_pos):
        hp = self.model.harness
        grasp_world = obj_pos + quat_rotate(obj_quat, self.model.obj.grasp_points)
        for h in range(self.model.d_hand):
            hj = self.hand_joints[h]
            if grip[h] >= hp.grip_threshold:
                dists = np.linalg.norm(grasp_world - fk_pos[hj], axis=1)
                near = float(np.min(dists)) <= hp.attach_radius
                if near and primary < 0:
                    primary = h
                    weld_quat, weld_pos = self._weld_offset(
                        fk_quat[hj], obj_quat, int(np.argmin(dists)))
                attached[h] = near or primary == h
            else:
                if primary == h:
                    primary = -1
                    # hand over to the other gripping hand if there is one
                    for other in range(self.model.d_hand):
                        if other != h and attached[other] and grip[other] >= hp.grip_threshold:
                            oj = self.hand_joints[other]
                            od = np.linalg.norm(grasp_world - fk_pos[oj], axis=1)
                            primary = other
                            weld_quat, weld_pos = self._weld_offset(
                                fk_quat[oj], obj_quat, int(np.argmin(od)))
                            break
                attached[h] = False
        return primary, attached, weld_quat, weld_pos

    def _weld_offset(self, hand_quat, obj_quat, grasp_index: int):
        """Weld with the hand snapped onto its nearest grasp point.

        Keeping only the orientation offset free makes the held pose a pure
        function of geometry rather than of the attach instant, so replayed
        references reproduce the same carry.
        """
        rel = quat_normalize(quat_multiply(quat_conjugate(hand_quat), obj_quat))
        return rel, -quat_rotate(rel, self.model.obj.grasp_points[grasp_index])


def step(state: SimState, action: np.ndarray, model: SimModel) -> SimState:
    """One control step (substepped physics) of the reduced harness."""
    return Simulator(model).step(state, action)


# ---------------------------------------------------------------------------
# goals and rollouts

@dataclass(frozen=True)
class GoalFrame:
    """One reference frame resolved into the quantities policies and rewards use."""

    q: np.ndarray            # (d_body,) reference joint angles
    root_pos: np.ndarray
    root_quat: np.ndarray
    joint_pos: np.ndarray    # (J, 3) reference world joint positions
    obj_pos: np.ndarray
    obj_quat: np.ndarray
    contact: np.ndarray      # (hands,) bool


def reference_goals(reference: HOIReference, model: SimModel) -> list[GoalFrame]:
    sk = model.skeleton
    human = reference.human
    goals = []
    for n in range(len(reference)):
        pos, _ = fk_arrays(sk, human.root_pos[n], human.root_quat[n], human.joint_aa[n])
        goals.append(GoalFrame(
            q=human.joint_aa[n, 1:sk.body_joint_count].reshape(-1),
            root_pos=human.root_pos[n],
            root_quat=human.root_quat[n],
            joint_pos=pos,
            obj_pos=reference.object.positions[n],
            obj_quat=reference.object.quaternions[n],
            contact=reference.contacts.flags[n],
        ))
    return goals


@dataclass
class RolloutResult:
    trajectory: HOIReference
    rewards: np.ndarray
    termination: str            # completed | fall | drop
    steps: int
    blend_log: list[dict] = field(default_factory=list)

    @property
    def episode_return(self) -> float:
        return float(self.rewards.sum())


def initial_state(simulator: Simulator, reference: HOIReference,
                  rng: np.random.Generator | None = None) -> SimState:
    """Reference frame 0 with a small seeded perturbation of the start pose."""
    m = simulator.model
    sk = m.skeleton
    human = reference.human
    q0 = human.joint_aa[0, 1:sk.body_joint_count].reshape(-1).copy()
    root_pos = human.root_pos[0].copy()
    root_quat = human.root_quat[0].copy()
    if rng is not None:
        hp = m.harness
        root_pos = root_pos + rng.uniform(-hp.init_pos_noise, hp.init_pos_noise, 3) * (1, 1, 0.5)
        tilt = rng.uniform(-hp.init_angle_noise, hp.init_angle_noise, 3) * (1, 1, 0.2)
        root_quat = quat_normalize(quat_multiply(quat_from_axis_angle(tilt), root_quat))
        q0 = q0 + rng.uniform(-hp.init_angle_noise, hp.init_angle_noise, q0.shape)
    return simulator.make_state(q0, root_pos, root_quat,
                                reference.object.positions[0], reference.object.quaternions[0])


def rollout(policy, reference: HOIReference, model: SimModel, seed: int = 0,
            perturb: bool = True, simulator: Simulator | None = None,
            goals: list[GoalFrame] | None = None) -> RolloutResult:
    """Execute a policy against a reference; records everything metrics need."""
    from .reward import imitation_reward

    sim = simulator or Simulator(model)
    if goals is None:
        goals = reference_goals(reference, model)
    rng = np.random.default_rng(seed)
    state = initial_state(sim, reference, rng if perturb else None)
    if hasattr(policy, "reset"):
        policy.reset()

    n_steps = min(model.config.episode_length, len(reference))
    sk = model.skeleton
    nj = sk.joint_count
    roots = [state.root_pos.copy()]
    quats = [state.root_quat.copy()]
    qs = [state.q.copy()]
    obj_p = [state.obj_pos.copy()]
    obj_q = [state.obj_quat.copy()]
    contacts = [state.attached.copy()]
    rewards = []
    blend_log: list[dict] = []
    termination = "completed"

    for n in range(n_steps):
        goal = goals[n]
        action = policy.act(state, goal, n)
        state = sim.step(state, action)
        roots.append(state.root_pos.copy())
        quats.append(state.root_quat.copy())
        qs.append(state.q.copy())
        obj_p.append(state.obj_pos.copy())
        obj_q.append(state.obj_quat.copy())
        contacts.append(state.attached.copy())
        rewards.append(imitation_reward(state, goal, model))
        if hasattr(policy, "last_log") and policy.last_log is not None:
            blend_log.append({"step": n, **policy.last_log})
        if state.root_pos[2] < model.harness.fall_pelvis_height:
            termination = "fall"
            break
        if np.linalg.norm(state.obj_pos - goal.obj_pos) > model.harness.drop_distance:
            termination = "drop"
            break

    n_frames = len(roots)
    joint_aa = np.zeros((n_frames, nj, 3))
    for i, qv in enumerate(qs):
        joint_aa[i, 1:sk.body_joint_count] = qv.reshape(-1, 3)
    fps = 1.0 / model.config.control_dt
    traj = HOIReference(
        human=MotionClip(sk, np.stack(roots), np.stack(quats), joint_aa, fps),
        object=ObjectTrajectory(np.stack(obj_p), np.stack(obj_q), fps),
        contacts=ContactMask(np.stack(contacts)),
        object_geometry=model.obj.vertices,
    )
    return RolloutResult(traj, np.asarray(rewards), termination, len(rewards), blend_log)
