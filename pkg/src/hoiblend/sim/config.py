"""Simulation configuration: timing, gains, joint limits, reward weights."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import ConfigurationError, ValidationError
from ..skeleton import SkeletonSpec, default_skeleton


@dataclass(frozen=True)
class SimConfig:
    sim_dt: float = 1.0 / 60.0
    control_dt: float = 1.0 / 30.0
    episode_length: int = 300
    ground_friction: float = 1.0
    ground_restitution: float = 0.0
    object_density: float = 200.0
    gravity: float = 9.81

    def __post_init__(self):
        if self.episode_length <= 0:
            raise ValidationError("episode_length must be positive")
        if self.sim_dt <= 0 or self.control_dt <= 0:
            raise ValidationError("time steps must be positive")
        ratio = self.control_dt / self.sim_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValidationError("control_dt must be an integer multiple of sim_dt")

    @property
    def substeps(self) -> int:
        return int(round(self.control_dt / self.sim_dt))


@dataclass(frozen=True)
class PDGains:
    """Per-DoF stiffness/damping; scalars broadcast over the body DoF."""

    kp: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kp", np.atleast_1d(np.asarray(self.kp, dtype=float)))
        object.__setattr__(self, "kd", np.atleast_1d(np.asarray(self.kd, dtype=float)))
        if np.any(self.kp < 0) or np.any(self.kd < 0):
            raise ValidationError("PD gains must be non-negative")

    @classmethod
    def uniform(cls, kp: float, kd: float, dof: int) -> "PDGains":
        return cls(np.full(dof, kp), np.full(dof, kd))

    def sized(self, dof: int) -> "PDGains":
        if self.kp.size == dof and self.kd.size == dof:
            return self
        if self.kp.size == 1 and self.kd.size == 1:
            return PDGains.uniform(float(self.kp[0]), float(self.kd[0]), dof)
        raise ValidationError(f"gains sized {self.kp.size} do not match {dof} DoF")


# Joint range-of-motion table, degrees. Body rows cover hip, knee, ankle, toe,
# torso, spine, chest, neck, head, thorax, shoulder, elbow and wrist joints;
# finger rows apply when a hand-articulated skeleton is configured.
DEFAULT_ROM_TABLE_DEG: dict[str, tuple[tuple[float, float], tuple[float, float]]] = {
    # name: ((x min, x max), (y/z min, y/z max))
    "Body": ((-180.0, 180.0), (-180.0, 180.0)),
    "Thumb1": ((-55.625, 55.625), (-55.625, 55.625)),
    "Thumb2": ((-5.625, 5.625), (-5.625, 5.625)),
    "Thumb3": ((-5.625, 90.0), (-5.625, 5.625)),
    "Index1": ((-55.625, 55.625), (-5.625, 5.625)),
    "Index2": ((-55.625, 55.625), (-5.625, 5.625)),
    "Index3": ((-5.625, 90.0), (-5.625, 5.625)),
    "Middle1": ((-55.625, 55.625), (-5.625, 5.625)),
    "Middle2": ((-55.625, 55.625), (-5.625, 5.625)),
    "Middle3": ((-5.625, 90.0), (-5.625, 5.625)),
    "Ring1": ((-55.625, 55.625), (-5.625, 5.625)),
    "Ring2": ((-55.625, 55.625), (-5.625, 5.625)),
    "Ring3": ((-5.625, 90.0), (-5.625, 5.625)),
    "Pinky1": ((-55.625, 55.625), (-5.625, 5.625)),
    "Pinky2": ((-55.625, 55.625), (-5.625, 5.625)),
    "Pinky3": ((-5.625, 90.0), (-5.625, 5.625)),
}


@dataclass(frozen=True)
class RangeOfMotion:
    """Per-joint, per-axis limits in degrees, keyed by joint name prefix."""

    table_deg: dict = field(default_factory=lambda: dict(DEFAULT_ROM_TABLE_DEG))

    def __post_init__(self):
        for name, ((xlo, xhi), (yzlo, yzhi)) in self.table_deg.items():
            if xlo > xhi or yzlo > yzhi:
                raise ValidationError(f"RoM for {name}: min exceeds max")

    def _row(self, joint_name: str):
        base = joint_name.lower().removeprefix("l_").removeprefix("r_")
        for key, row in self.table_deg.items():
            if key != "Body" and base.startswith(key.lower()):
                return row
        return self.table_deg["Body"]

    def dof_limits(self, skeleton: SkeletonSpec) -> np.ndarray:
        """Limits in radians for the non-root body DoF vector, shape (dof, 2)."""
        rows = []
        for j in range(1, skeleton.body_joint_count):
            (xlo, xhi), (yzlo, yzhi) = self._row(skeleton.joints[j].name)
            rows.extend([(xlo, xhi), (yzlo, yzhi), (yzlo, yzhi)])
        return np.deg2rad(np.array(rows, dtype=float))


@dataclass(frozen=True)
class RewardWeights:
    alpha_joint: float = 100.0  # 1/m^2 on mean squared joint-position error
    alpha_object: float = 50.0  # 1/m^2 on squared object-position error
    contact_bonus: float = 0.5

    @property
    def r_max(self) -> float:
        return 2.0 + self.contact_bonus


@dataclass(frozen=True)
class HarnessParams:
    """Reduced-model constants for the desk-scale rollout harness."""

    body_mass: float = 45.0
    root_inertia: tuple[float, float, float] = (3.0, 3.0, 1.5)
    joint_inertia: float = 0.4
    torque_limit_body: float = 900.0
    torque_limit_hand: float = 20.0
    ground_kn: float = 30000.0
    ground_cn: float = 600.0
    ground_kt: float = 300.0
    contact_force_max: float = 500.0  # per contact point; bounds leg thrust
    angular_damping: float = 3.0
    pelvis_radius: float = 0.10
    foot_heel_offset: tuple[float, float, float] = (0.03, 0.0, -0.13)
    foot_toe_offset: tuple[float, float, float] = (0.03, 0.0, 0.13)
    attach_radius: float = 0.22
    grip_threshold: float = 0.5
    fall_pelvis_height: float = 0.3
    drop_distance: float = 0.3
    init_pos_noise: float = 0.01
    init_angle_noise: float = 0.02


@dataclass(frozen=True)
class ObjectSpec:
    """Rigid box object: geometry, grasp points and mass properties."""

    half_extents: tuple[float, float, float] = (0.14, 0.18, 0.20)
    grasp_points: np.ndarray = field(default_factory=lambda: np.array(
        [[0.0, 0.19, 0.12], [0.0, -0.19, 0.12]]))
    density: float = 200.0

    def __post_init__(self):
        object.__setattr__(self, "grasp_points", np.asarray(self.grasp_points, dtype=float))

    @property
    def vertices(self) -> np.ndarray:
        hx, hy, hz = self.half_extents
        sign = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        return sign * np.array([hx, hy, hz])

    @property
    def mass(self) -> float:
        hx, hy, hz = self.half_extents
        return self.density * 8.0 * hx * hy * hz

    @property
    def inertia(self) -> float:
        # isotropic approximation: mean of the box diagonal inertia terms
        hx, hy, hz = self.half_extents
        m = self.mass
        diag = m / 3.0 * np.array([hy**2 + hz**2, hx**2 + hz**2, hx**2 + hy**2])
        return float(diag.mean())


@dataclass(frozen=True)
class SimModel:
    """Everything a rollout needs besides the reference: rig, object, constants."""

    skeleton: SkeletonSpec
    config: SimConfig = SimConfig()
    gains: PDGains = field(default_factory=lambda: PDGains(np.array([600.0]), np.array([40.0])))
    rom: RangeOfMotion = RangeOfMotion()
    reward: RewardWeights = RewardWeights()
    harness: HarnessParams = HarnessParams()
    obj: ObjectSpec = ObjectSpec()

    def __post_init__(self):
        object.__setattr__(self, "gains", self.gains.sized(self.d_body))

    @property
    def d_body(self) -> int:
        return 3 * (self.skeleton.body_joint_count - 1)

    @property
    def d_hand(self) -> int:
        return self.skeleton.hand_joint_count

    @property
    def d_full(self) -> int:
        return self.d_body + self.d_hand


def default_model(**overrides) -> SimModel:
    return SimModel(skeleton=default_skeleton(), **overrides)


def load_sim_config(path: str) -> SimModel:
    """Structured-text (JSON) config file covering any subset of the model."""
    with open(path) as f:
        doc = json.load(f)
    kwargs = {}
    if "sim" in doc:
        kwargs["config"] = SimConfig(**doc["sim"])
    if "gains" in doc:
        kwargs["gains"] = PDGains(np.asarray(doc["gains"]["kp"], dtype=float),
                                  np.asarray(doc["gains"]["kd"], dtype=float))
    if "rom" in doc:
        table = {k: ((v[0][0], v[0][1]), (v[1][0], v[1][1])) for k, v in doc["rom"].items()}
        kwargs["rom"] = RangeOfMotion(table)
    if "reward" in doc:
        kwargs["reward"] = RewardWeights(**doc["reward"])
    if "harness" in doc:
        kwargs["harness"] = HarnessParams(**{k: tuple(v) if isinstance(v, list) else v
                                             for k, v in doc["harness"].items()})
    if "object" in doc:
        obj = doc["object"]
        kwargs["obj"] = ObjectSpec(
            half_extents=tuple(obj.get("half_extents", ObjectSpec.half_extents)),
            grasp_points=np.asarray(obj["grasp_points"], dtype=float) if "grasp_points" in obj
            else ObjectSpec().grasp_points,
            density=float(obj.get("density", 200.0)),
        )
    unknown = set(doc) - {"sim", "gains", "rom", "reward", "harness", "object"}
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    return default_model(**kwargs)


def save_sim_config(model: SimModel, path: str) -> None:
    doc = {
        "sim": asdict(model.config),
        "gains": {"kp": model.gains.kp.tolist(), "kd": model.gains.kd.tolist()},
        "rom": {k: [list(v[0]), list(v[1])] for k, v in model.rom.table_deg.items()},
        "reward": asdict(model.reward),
        "harness": {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in asdict(model.harness).items()},
        "object": {
            "half_extents": list(model.obj.half_extents),
            "grasp_points": model.obj.grasp_points.tolist(),
            "density": model.obj.density,
        },
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
