"""Clipped-surrogate policy optimization with GAE advantages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .policy import ActorCritic
from .spec import AgentSpec, total_reward


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    log_prob: float
    value: float
    reward_ext: float
    reward_int: float
    done: bool
    next_obs: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.reward_ext) and math.isfinite(self.reward_int)):
            raise ValueError("rewards must be finite")
        if self.log_prob > 1e-9:
            raise ValueError("log_prob must be <= 0, got %g" % self.log_prob)


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                last_value: float, gamma: float, lam: float):
    """Generalized advantage estimates plus value targets, walked backwards."""
    n = len(rewards)
    adv = np.zeros(n)
    running = 0.0
    next_value = last_value
    for t in range(n - 1, -1, -1):
        alive = 1.0 - float(dones[t])
        delta = rewards[t] + gamma * next_value * alive - values[t]
        running = delta + gamma * lam * alive * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def _batch_arrays(batch: List[Transition], spec: AgentSpec):
    obs = np.stack([t.obs for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    old_logp = np.array([t.log_prob for t in batch])
    values = np.array([t.value for t in batch])
    dones = np.array([t.done for t in batch], dtype=np.float64)
    rewards = np.array([total_reward(t.reward_ext, t.reward_int, spec)
                        for t in batch])
    return obs, actions, old_logp, values, dones, rewards


def ppo_losses(policy: ActorCritic, obs, actions, old_logp, adv, returns,
               hp) -> dict:
    """Build the three loss terms on one minibatch. Values are Tensors so a
    caller can combine and backprop; the dict also carries floats for logs."""
    logp_all, value_pred = policy.evaluate(obs)
    logp = logp_all.gather(actions)
    ratio = (logp - old_logp).exp()
    surr = ratio * adv
    clipped = ratio.clip(1.0 - hp.clip_eps, 1.0 + hp.clip_eps) * adv
    surrogate = surr.minimum(clipped).mean()
    value_loss = ((value_pred - returns) ** 2.0).mean()
    entropy = -(logp_all.exp() * logp_all).sum(axis=1).mean()
    loss = -surrogate + hp.vf_coef * value_loss - hp.ent_coef * entropy
    return {
        "loss": loss,
        "surrogate": float(surrogate.data),
        "value_loss": float(value_loss.data),
        "entropy": float(entropy.data),
    }


def surrogate_objective(policy: ActorCritic, batch: List[Transition],
                        spec: AgentSpec, last_value: float = 0.0) -> float:
    """Evaluate the clipped surrogate on a batch under current weights,
    using the batch's own stored log-probs and advantage estimates."""
    hp = spec.hyperparams
    obs, actions, old_logp, values, dones, rewards = _batch_arrays(batch, spec)
    adv, _ = compute_gae(rewards, values, dones, last_value, hp.gamma, hp.lam)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    logp_all, _ = policy.evaluate(obs)
    logp = logp_all.gather(actions)
    ratio = np.exp(logp.data - old_logp)
    clipped = np.clip(ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps)
    return float(np.minimum(ratio * adv, clipped * adv).mean())


def ppo_update(policy: ActorCritic, optimizer, batch: List[Transition],
               spec: AgentSpec, rng: np.random.Generator,
               model_loss_fn=None) -> dict:
    """Epochs of minibatch updates on one rollout. When model_loss_fn is
    given (signature: indices -> (Tensor, float)), its loss joins the PPO
    loss on every minibatch and the mean float is reported as model_loss."""
    if not batch:
        raise ValueError("empty batch")
    hp = spec.hyperparams
    obs, actions, old_logp, values, dones, rewards = _batch_arrays(batch, spec)
    if batch[-1].done:
        last_value = 0.0
    else:
        last_value = policy.value_of(batch[-1].next_obs)
    adv, returns = compute_gae(rewards, values, dones, last_value,
                               hp.gamma, hp.lam)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    n = len(batch)
    idx = np.arange(n)
    stats = {"surrogate": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "model_loss": 0.0, "updates": 0}
    for _ in range(hp.epochs):
        rng.shuffle(idx)
        for start in range(0, n, hp.minibatch):
            mb = idx[start:start + hp.minibatch]
            parts = ppo_losses(policy, obs[mb], actions[mb], old_logp[mb],
                               adv[mb], returns[mb], hp)
            loss = parts["loss"]
            if model_loss_fn is not None:
                extra, extra_val = model_loss_fn(mb)
                loss = loss + extra
                stats["model_loss"] += extra_val
            loss.backward()
            optimizer.step()
            stats["surrogate"] += parts["surrogate"]
            stats["value_loss"] += parts["value_loss"]
            stats["entropy"] += parts["entropy"]
            stats["updates"] += 1
    k = max(1, stats.pop("updates"))
    return {key: val / k for key, val in stats.items()}
