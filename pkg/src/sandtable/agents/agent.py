"""Composition root: one shared encoder feeding the actor-critic and the
chosen representation model, one optimizer, one rollout buffer.

Random-policy agents never register their policy heads with the optimizer,
so those weights stay at initialization while the encoder keeps learning.
"""

from __future__ import annotations

import math
from typing import List, Optional

import numpy as np

from ..nn import Adam, Encoder, EncoderSpec, dump_checkpoint_bytes
from .intrinsic import CURL, ICM, RIDE, RND, RunningStd
from .policy import ActorCritic, N_ACTIONS
from .ppo import Transition, ppo_losses, compute_gae, _batch_arrays
from .spec import AgentSpec, Exploration, Model, Phase

LOG_UNIFORM = math.log(1.0 / N_ACTIONS)


class Agent:
    def __init__(self, spec: AgentSpec, seed: int = 0,
                 encoder_spec: Optional[EncoderSpec] = None,
                 n_actions: int = N_ACTIONS):
        self.spec = spec
        self.seed = seed
        hp = spec.hyperparams
        seq = np.random.SeedSequence(seed)
        init_rng, target_rng, self.act_rng, self.update_rng, self.crop_rng = [
            np.random.default_rng(s) for s in seq.spawn(5)]

        self.encoder = Encoder(encoder_spec or EncoderSpec(), init_rng)
        self.ac = ActorCritic(self.encoder, init_rng, n_actions)

        self.icm: Optional[ICM] = None
        self.rnd: Optional[RND] = None
        self.curl: Optional[CURL] = None
        if spec.model == Model.ICM:
            self.icm = ICM(self.encoder, n_actions, hp.eta, hp.beta, init_rng)
        elif spec.model == Model.RND:
            self.rnd = RND(self.encoder, target_rng)
        elif spec.model == Model.CURL:
            self.curl = CURL(self.encoder, hp.curl_tau, hp.crop, init_rng)
        self.ride: Optional[RIDE] = None
        if spec.exploration == Exploration.RIDE:
            self.ride = RIDE(self.encoder, hp.ride_count_norm,
                             hp.ride_count_window)

        params = list(self.encoder.parameters())
        if not self.random_policy:
            params += self.ac.head_parameters()
        for module in (self.icm, self.rnd, self.curl):
            if module is not None:
                params += module.trainable_parameters()
        self.optimizer = Adam(params, lr=hp.lr)

        self.normalizer = RunningStd()
        self.rollout: List[Transition] = []
        self.total_steps = 0

    # -- phase / flavor helpers ---------------------------------------------

    @property
    def random_policy(self) -> bool:
        return (self.spec.exploration == Exploration.RANDOM
                and self.spec.phase == Phase.EXPLORE)

    @property
    def trains_policy(self) -> bool:
        return not self.random_policy

    # -- acting ----------------------------------------------------------------

    def act(self, obs: np.ndarray):
        if self.random_policy:
            return int(self.act_rng.integers(0, self.ac.n_actions)), \
                LOG_UNIFORM, 0.0
        return self.ac.act(obs, self.act_rng)

    def intrinsic(self, obs: np.ndarray, action: int,
                  next_obs: np.ndarray) -> float:
        expl = self.spec.exploration
        if expl == Exploration.FORWARD_ERROR:
            raw = self.icm.intrinsic(obs, action, next_obs)
        elif expl == Exploration.STATE_PREDICTION_ERROR:
            raw = self.rnd.intrinsic(next_obs)
        elif expl == Exploration.RIDE:
            raw = self.ride.intrinsic(obs, next_obs)
        else:
            return 0.0
        return self.normalizer.normalize(raw)

    # -- learning ---------------------------------------------------------------

    def observe(self, tr: Transition):
        self.rollout.append(tr)
        self.total_steps += 1

    def ready_to_update(self) -> bool:
        return len(self.rollout) >= self.spec.hyperparams.rollout

    def model_loss_fn(self, batch_obs, batch_actions, batch_next):
        """Minibatch model loss closure for the joint update."""
        model = self.spec.model
        if model == Model.ICM:
            return lambda mb: self.icm.loss(
                batch_obs[mb], batch_actions[mb], batch_next[mb])
        if model == Model.RND:
            return lambda mb: self.rnd.loss(batch_next[mb])
        if model == Model.CURL:
            return lambda mb: self.curl.loss(batch_obs[mb], self.crop_rng)
        return None

    def update(self) -> dict:
        """One training pass over the buffered rollout; returns mean stats
        including model_loss (the curriculum's world-model signal)."""
        batch = self.rollout
        if not batch:
            raise ValueError("empty batch")
        hp = self.spec.hyperparams
        obs, actions, old_logp, values, dones, rewards = \
            _batch_arrays(batch, self.spec)
        next_obs = np.stack([t.next_obs for t in batch])
        loss_fn = self.model_loss_fn(obs, actions, next_obs)

        stats = {"surrogate": 0.0, "value_loss": 0.0, "entropy": 0.0,
                 "model_loss": 0.0, "updates": 0}
        if self.trains_policy:
            if batch[-1].done:
                last_value = 0.0
            else:
                last_value = self.ac.value_of(batch[-1].next_obs)
            adv, returns = compute_gae(rewards, values, dones, last_value,
                                       hp.gamma, hp.lam)
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)

        idx = np.arange(len(batch))
        for _ in range(hp.epochs):
            self.update_rng.shuffle(idx)
            for start in range(0, len(batch), hp.minibatch):
                mb = idx[start:start + hp.minibatch]
                if self.trains_policy:
                    parts = ppo_losses(self.ac, obs[mb], actions[mb],
                                       old_logp[mb], adv[mb], returns[mb], hp)
                    loss = parts["loss"]
                    stats["surrogate"] += parts["surrogate"]
                    stats["value_loss"] += parts["value_loss"]
                    stats["entropy"] += parts["entropy"]
                else:
                    loss = None
                if loss_fn is not None:
                    extra, extra_val = loss_fn(mb)
                    loss = extra if loss is None else loss + extra
                    stats["model_loss"] += extra_val
                if loss is None:
                    continue
                loss.backward()
                self.optimizer.step()
                if self.curl is not None:
                    self.curl.momentum_update()
                stats["updates"] += 1
        self.rollout = []
        k = max(1, stats.pop("updates"))
        return {key: val / k for key, val in stats.items()}

    # -- checkpointing --------------------------------------------------------

    def checkpoint_bytes(self, source: str = "") -> bytes:
        return dump_checkpoint_bytes(
            self.encoder.spec.to_dict(), self.encoder.state_arrays(),
            step=self.total_steps, source=source,
            extra={"agent": self.spec.name})

    def load_encoder(self, checkpoint):
        spec_dict = self.encoder.spec.to_dict()
        if checkpoint.spec != spec_dict:
            raise ValueError("checkpoint spec mismatch: %s vs %s"
                             % (checkpoint.spec, spec_dict))
        self.encoder.load_state(checkpoint.params)
