from .config import (
    HarnessParams,
    ObjectSpec,
    PDGains,
    RangeOfMotion,
    RewardWeights,
    SimConfig,
    SimModel,
    default_model,
    load_sim_config,
    save_sim_config,
)
from .experts import DynamicsExpert, ExpertInterface, InteractionExpert, make_scripted_experts
from .harness import (
    GoalFrame,
    RolloutResult,
    SimState,
    Simulator,
    initial_state,
    reference_goals,
    rollout,
    step,
)
from .reward import imitation_reward

__all__ = [
    "DynamicsExpert",
    "ExpertInterface",
    "GoalFrame",
    "HarnessParams",
    "InteractionExpert",
    "ObjectSpec",
    "PDGains",
    "RangeOfMotion",
    "RewardWeights",
    "RolloutResult",
    "SimConfig",
    "SimModel",
    "SimState",
    "Simulator",
    "default_model",
    "imitation_reward",
    "initial_state",
    "load_sim_config",
    "make_scripted_experts",
    "reference_goals",
    "rollout",
    "save_sim_config",
    "step",
]
