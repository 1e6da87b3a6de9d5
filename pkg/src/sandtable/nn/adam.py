"""Adam with bias correction. step() applies the update and zeroes grads."""

from __future__ import annotations

from typing import List

import numpy as np

from .tensor import Tensor


class Adam:
    def __init__(self, params: List[Tensor], lr: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ValueError("parameter %d has no gradient" % i)
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / b1t
            v_hat = self.v[i] / b2t
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.zero_grad()

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def state_arrays(self):
        """Moment buffers plus step count, for checkpointing."""
        out = [("adam.t", np.array([float(self.t)]))]
        for i in range(len(self.params)):
            out.append(("adam.m%d" % i, self.m[i].copy()))
            out.append(("adam.v%d" % i, self.v[i].copy()))
        return out

    def load_state(self, arrays: dict):
        self.t = int(arrays["adam.t"][0])
        for i in range(len(self.params)):
            self.m[i] = arrays["adam.m%d" % i].copy()
            self.v[i] = arrays["adam.v%d" % i].copy()
