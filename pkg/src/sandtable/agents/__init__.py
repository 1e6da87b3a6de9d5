from .agent import Agent
from .intrinsic import CURL, ICM, RIDE, RND, RunningStd, contrastive_loss
from .policy import ActorCritic, categorical_sample
from .ppo import Transition, compute_gae, ppo_update, surrogate_objective
from .spec import (
    COMBO_NAMES,
    VALID_COMBOS,
    AgentSpec,
    Exploration,
    Hyperparams,
    Model,
    Phase,
    total_reward,
)

__all__ = [
    "Agent",
    "AgentSpec",
    "ActorCritic",
    "COMBO_NAMES",
    "CURL",
    "Exploration",
    "Hyperparams",
    "ICM",
    "Model",
    "Phase",
    "RIDE",
    "RND",
    "RunningStd",
    "Transition",
    "VALID_COMBOS",
    "categorical_sample",
    "compute_gae",
    "contrastive_loss",
    "ppo_update",
    "surrogate_objective",
    "total_reward",
]
