"""Intrinsic-motivation and representation-learning modules: curiosity by
forward-model error, novelty by distillation error, impact by latent change,
and contrastive encoding. All reward values are plain floats >= 0; training
losses are Tensors built on the shared encoder."""

from __future__ import annotations

import math

import numpy as np

from ..nn import Dense, Encoder, Tensor
from ..nn.layers import orthogonal


class RunningStd:
    """Welford stream variance; normalize() divides by the running std.
    Returns the raw value until two samples exist."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, x: float):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / self.count)

    def normalize(self, x: float) -> float:
        self.update(x)
        if self.count < 2 or self.std == 0.0:
            return x
        return x / (self.std + 1e-8)


def one_hot(actions: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((len(actions), n))
    out[np.arange(len(actions)), actions] = 1.0
    return out


class ICM:
    """Forward + inverse dynamics on the shared latent. The inverse
    cross-entropy trains the encoder; the forward model trains on detached
    embeddings so curiosity error cannot collapse the representation."""

    def __init__(self, encoder: Encoder, n_actions: int, eta: float,
                 beta: float, rng: np.random.Generator):
        self.encoder = encoder
        self.n_actions = n_actions
        self.eta = eta
        self.beta = beta
        latent = encoder.spec.latent_dim
        # inverse head: logits from both endpoint embeddings
        self.inv_s = Dense(latent, n_actions, rng, gain=1.0)
        self.inv_n = Dense(latent, n_actions, rng, gain=1.0)
        # forward model: one hidden layer on (embedding, action)
        self.fwd_s = Dense(latent, latent, rng)
        self.fwd_a = Dense(n_actions, latent, rng)
        self.fwd_out = Dense(latent, latent, rng, gain=1.0)

    def trainable_parameters(self):
        return (self.inv_s.parameters() + self.inv_n.parameters()
                + self.fwd_s.parameters() + self.fwd_a.parameters()
                + self.fwd_out.parameters())

    def inverse_logits(self, z_s: Tensor, z_n: Tensor) -> Tensor:
        return self.inv_s(z_s) + self.inv_n(z_n)

    def forward_predict(self, z_s: Tensor, actions: np.ndarray) -> Tensor:
        hot = Tensor(one_hot(actions, self.n_actions))
        hidden = (self.fwd_s(z_s) + self.fwd_a(hot)).relu()
        return self.fwd_out(hidden)

    def forward_error(self, z_s: np.ndarray, action: int,
                      z_n: np.ndarray) -> float:
        """eta/2 * squared miss of the forward model, on raw latents."""
        pred = self.forward_predict(Tensor(z_s[None]), np.array([action]))
        err = pred.data[0] - z_n
        return 0.5 * self.eta * float(err @ err)

    def intrinsic(self, obs: np.ndarray, action: int,
                  next_obs: np.ndarray) -> float:
        z_s = self.encoder(obs[None]).data[0]
        z_n = self.encoder(next_obs[None]).data[0]
        return self.forward_error(z_s, action, z_n)

    def loss(self, obs: np.ndarray, actions: np.ndarray,
             next_obs: np.ndarray):
        """(1-beta) * inverse CE + beta * forward MSE. Returns the Tensor
        and the forward-error float (the world-model loss)."""
        z_s = self.encoder(obs)
        z_n = self.encoder(next_obs)
        logits = self.inverse_logits(z_s, z_n)
        ce = -logits.log_softmax(axis=-1).gather(actions).mean()
        pred = self.forward_predict(z_s.detach(), actions)
        diff = pred - z_n.detach()
        fwd = ((diff * diff).sum(axis=1) * 0.5).mean()
        total = (1.0 - self.beta) * ce + self.beta * fwd
        return total, float(fwd.data)


class RND:
    """Predicts the output of a frozen randomly initialized twin; the miss
    distance is the novelty signal. The predictor runs the shared encoder
    through a trainable linear projection; the target is a frozen twin with
    its own frozen projection (linear outputs, so nothing saturates)."""

    def __init__(self, encoder: Encoder, rng: np.random.Generator):
        latent = encoder.spec.latent_dim
        self.predictor = encoder
        self.predictor_head = Dense(latent, latent, rng, gain=1.0)
        self.target = Encoder(encoder.spec, rng)
        self.target_head = Dense(latent, latent, rng, gain=1.0)
        for p in self.target.parameters() + self.target_head.parameters():
            p.requires_grad = False

    def trainable_parameters(self):
        return self.predictor_head.parameters()

    def predict(self, obs_batch: np.ndarray) -> Tensor:
        return self.predictor_head(self.predictor(obs_batch))

    def target_out(self, obs_batch: np.ndarray) -> np.ndarray:
        return self.target_head(self.target(obs_batch)).data

    def intrinsic(self, next_obs: np.ndarray) -> float:
        pred = self.predict(next_obs[None]).data[0]
        tgt = self.target_out(next_obs[None])[0]
        return float(np.mean((pred - tgt) ** 2))

    def loss(self, next_obs: np.ndarray):
        pred = self.predict(next_obs)
        tgt = Tensor(self.target_out(next_obs))
        diff = pred - tgt
        mse = (diff * diff).mean(axis=1).mean()
        return mse, float(mse.data)


class RIDE:
    """Latent-impact reward: distance between consecutive embeddings,
    optionally discounted by pseudo-episodic visit counts."""

    def __init__(self, encoder: Encoder, count_norm: bool = False,
                 count_window: int = 512):
        self.encoder = encoder
        self.count_norm = count_norm
        self.count_window = count_window
        self._counts = {}
        self._since_reset = 0

    def _cell(self, z: np.ndarray):
        return tuple(np.round(z, 1))

    def intrinsic(self, obs: np.ndarray, next_obs: np.ndarray) -> float:
        z_s = self.encoder(obs[None]).data[0]
        z_n = self.encoder(next_obs[None]).data[0]
        r = float(np.linalg.norm(z_n - z_s))
        if not self.count_norm:
            return r
        self._since_reset += 1
        if self._since_reset > self.count_window:
            self._counts.clear()
            self._since_reset = 1
        key = self._cell(z_n)
        self._counts[key] = self._counts.get(key, 0) + 1
        return r / math.sqrt(self._counts[key])


def contrastive_loss(logits: Tensor) -> Tensor:
    """Cross-entropy over a square logit matrix with positives on the
    diagonal."""
    n = logits.shape[0]
    return -logits.log_softmax(axis=-1).gather(np.arange(n)).mean()


class CURL:
    """Contrastive encoding over paired random crops: query from the live
    encoder, key from an EMA twin, bilinear similarity."""

    def __init__(self, encoder: Encoder, tau: float, crop: int,
                 rng: np.random.Generator):
        self.encoder = encoder
        self.tau = tau
        self.crop = crop
        self.momentum = Encoder(encoder.spec, rng)
        self.momentum.load_state(dict(encoder.state_arrays()))
        for p in self.momentum.parameters():
            p.requires_grad = False
        latent = encoder.spec.latent_dim
        self.w = Tensor(orthogonal((latent, latent), 1.0, rng),
                        requires_grad=True)
        hw = encoder.spec.input_hw
        # nearest-neighbor index map for resizing a crop back to full size
        self._resize_idx = np.minimum(
            (np.arange(hw) + 0.5) * crop / hw, crop - 1).astype(np.int64)

    def trainable_parameters(self):
        return [self.w]

    def random_crop(self, obs_batch: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
        """Independent crops per image, resized back to the native size."""
        hw = self.encoder.spec.input_hw
        span = hw - self.crop
        out = np.empty_like(obs_batch)
        for i, img in enumerate(obs_batch):
            x0 = int(rng.integers(0, span + 1))
            y0 = int(rng.integers(0, span + 1))
            patch = img[y0:y0 + self.crop, x0:x0 + self.crop]
            out[i] = patch[self._resize_idx][:, self._resize_idx]
        return out

    def logits(self, queries: Tensor, keys: Tensor) -> Tensor:
        return (queries @ self.w) @ keys.transpose()

    def loss(self, obs_batch: np.ndarray, rng: np.random.Generator):
        if len(obs_batch) < 2:
            raise ValueError("contrastive batch needs at least 2 observations,"
                             " got %d" % len(obs_batch))
        q = self.encoder(self.random_crop(obs_batch, rng))
        k = Tensor(self.momentum(self.random_crop(obs_batch, rng)).data)
        loss = contrastive_loss(self.logits(q, k))
        return loss, float(loss.data)

    def momentum_update(self):
        """theta_key <- tau * theta_key + (1 - tau) * theta_query, so tau=1
        freezes the twin entirely."""
        for (_, src), (_, dst) in zip(self.encoder.named_parameters(),
                                      self.momentum.named_parameters()):
            dst.data = self.tau * dst.data + (1.0 - self.tau) * src.data
