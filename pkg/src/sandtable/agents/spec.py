"""Agent configuration: which representation model runs, which intrinsic
signal drives exploration, and the reward phase rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Model(Enum):
    NONE = "none"
    ICM = "icm"
    RND = "rnd"
    CURL = "curl"


class Exploration(Enum):
    EXTRINSIC = "extrinsic"
    FORWARD_ERROR = "forward_error"
    STATE_PREDICTION_ERROR = "state_prediction_error"
    RIDE = "ride"
    RANDOM = "random"


class Phase(Enum):
    EXPLORE = "explore"
    FINETUNE = "finetune"


#: The composable combinations, plus plain PPO.
VALID_COMBOS = frozenset({
    (Model.NONE, Exploration.EXTRINSIC),
    (Model.ICM, Exploration.FORWARD_ERROR),
    (Model.RND, Exploration.STATE_PREDICTION_ERROR),
    (Model.ICM, Exploration.RIDE),
    (Model.RND, Exploration.RIDE),
    (Model.CURL, Exploration.RIDE),
    (Model.CURL, Exploration.RANDOM),
})

#: CLI-facing shorthand for each combination.
COMBO_NAMES = {
    "ppo": (Model.NONE, Exploration.EXTRINSIC),
    "icm": (Model.ICM, Exploration.FORWARD_ERROR),
    "rnd": (Model.RND, Exploration.STATE_PREDICTION_ERROR),
    "icm+ride": (Model.ICM, Exploration.RIDE),
    "rnd+ride": (Model.RND, Exploration.RIDE),
    "curl+ride": (Model.CURL, Exploration.RIDE),
    "curl+random": (Model.CURL, Exploration.RANDOM),
}


@dataclass
class Hyperparams:
    eta: float = 1.0                # intrinsic reward scale
    beta: float = 0.2               # icm forward/inverse mix
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    epochs: int = 4
    minibatch: int = 256
    rollout: int = 2048
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    curl_tau: float = 0.005
    crop: int = 64
    lr: float = 1e-3
    ride_count_norm: bool = False
    ride_count_window: int = 512    # pseudo-episode length for counts


@dataclass
class AgentSpec:
    model: Model = Model.NONE
    exploration: Exploration = Exploration.EXTRINSIC
    share_encoder: bool = True
    phase: Phase = Phase.EXPLORE
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        if isinstance(self.model, str):
            self.model = Model(self.model)
        if isinstance(self.exploration, str):
            self.exploration = Exploration(self.exploration)
        if (self.model, self.exploration) not in VALID_COMBOS:
            raise ValueError(
                "invalid model/exploration combination: %s/%s"
                % (self.model.value, self.exploration.value))
        if self.phase == Phase.EXPLORE and not self.share_encoder:
            raise ValueError("exploration requires a shared encoder")

    @classmethod
    def from_name(cls, name: str, **kw) -> "AgentSpec":
        try:
            model, exploration = COMBO_NAMES[name]
        except KeyError:
            raise ValueError("unknown agent name %r; choose from %s"
                             % (name, sorted(COMBO_NAMES)))
        return cls(model=model, exploration=exploration, **kw)

    @property
    def name(self) -> str:
        for label, combo in COMBO_NAMES.items():
            if combo == (self.model, self.exploration):
                return label
        raise AssertionError("unreachable")


def total_reward(reward_ext: float, reward_int: float, spec: AgentSpec) -> float:
    """Phase rule: exploration consumes intrinsic reward only, fine-tuning
    extrinsic only. Plain PPO always trains on the extrinsic signal."""
    if spec.exploration == Exploration.EXTRINSIC:
        return reward_ext
    if spec.phase == Phase.FINETUNE:
        return reward_ext
    return reward_int
