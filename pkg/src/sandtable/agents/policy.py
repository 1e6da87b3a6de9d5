"""Actor-critic heads over the shared encoder, with deterministic
inverse-CDF categorical sampling."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..nn import Dense, Encoder, Tensor

N_ACTIONS = 8


def categorical_sample(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF draw: smallest index whose cumulative mass exceeds u."""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, len(probs) - 1)


class ActorCritic:
    def __init__(self, encoder: Encoder, rng: np.random.Generator,
                 n_actions: int = N_ACTIONS):
        self.encoder = encoder
        self.n_actions = n_actions
        latent = encoder.spec.latent_dim
        self.policy = Dense(latent, n_actions, rng, gain=0.01)
        self.value = Dense(latent, 1, rng, gain=1.0)

    def heads(self, z: Tensor) -> Tuple[Tensor, Tensor]:
        """(log-probs (B, A), values (B,)) from a latent batch."""
        logp = self.policy(z).log_softmax(axis=-1)
        val = self.value(z).reshape(-1)
        return logp, val

    def evaluate(self, obs_batch: np.ndarray) -> Tuple[Tensor, Tensor]:
        return self.heads(self.encoder(obs_batch))

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        """Sample one action. Returns (action, log_prob, value)."""
        logp, val = self.evaluate(obs[None])
        probs = np.exp(logp.data[0])
        action = categorical_sample(probs, rng.random())
        return action, float(logp.data[0, action]), float(val.data[0])

    def value_of(self, obs: np.ndarray) -> float:
        _, val = self.evaluate(obs[None])
        return float(val.data[0])

    def head_parameters(self):
        return self.policy.parameters() + self.value.parameters()

    def parameters(self):
        return self.encoder.parameters() + self.head_parameters()

    def named_head_parameters(self):
        return [("policy.w", self.policy.w), ("policy.b", self.policy.b),
                ("value.w", self.value.w), ("value.b", self.value.b)]
