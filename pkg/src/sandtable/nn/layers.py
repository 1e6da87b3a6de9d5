"""Layers and the shared vision encoder.

Weight layout conventions: Dense keeps W as (in, out) so forward is x @ W + b;
Conv2d keeps W as (filters, channels, k, k). parameters() order is stable and
is the declaration order used by checkpoint files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .tensor import Tensor

RELU_GAIN = math.sqrt(2.0)


def orthogonal(shape, gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal init: QR of a gaussian, sign-fixed so the result is unique,
    scaled by gain. For >2-D shapes the trailing dims are flattened."""
    rows = shape[0]
    cols = int(np.prod(shape[1:]))
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return (gain * q[:rows, :cols]).reshape(shape)


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 gain: float = RELU_GAIN):
        self.w = Tensor(orthogonal((out_dim, in_dim), gain, rng).T,
                        requires_grad=True)
        self.b = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.w + self.b

    def parameters(self):
        return [self.w, self.b]


class Conv2d:
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int,
                 rng: np.random.Generator, gain: float = RELU_GAIN):
        self.stride = stride
        self.w = Tensor(orthogonal((out_ch, in_ch, kernel, kernel), gain, rng),
                        requires_grad=True)
        self.b = Tensor(np.zeros(out_ch), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x.conv2d(self.w, self.b, self.stride)

    def parameters(self):
        return [self.w, self.b]


@dataclass
class EncoderSpec:
    """(out_channels, kernel, stride) per conv layer, then a dense head."""
    conv: Tuple[Tuple[int, int, int], ...] = ((32, 8, 4), (64, 4, 2), (64, 3, 1))
    latent_dim: int = 128
    input_hw: int = 84
    input_channels: int = 3

    def __post_init__(self):
        if len(self.conv) != 3:
            raise ValueError("encoder takes exactly three conv layers, got %d"
                             % len(self.conv))
        if self.latent_dim <= 0:
            raise ValueError("latent_dim must be positive")

    def conv_output_hw(self) -> int:
        hw = self.input_hw
        for _, kernel, stride in self.conv:
            hw = (hw - kernel) // stride + 1
            if hw < 1:
                raise ValueError("conv stack does not fit a %dx%d input"
                                 % (self.input_hw, self.input_hw))
        return hw

    def flat_dim(self) -> int:
        return self.conv[-1][0] * self.conv_output_hw() ** 2

    def to_dict(self) -> dict:
        return {
            "conv": [list(layer) for layer in self.conv],
            "latent_dim": self.latent_dim,
            "input_hw": self.input_hw,
            "input_channels": self.input_channels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderSpec":
        return cls(conv=tuple(tuple(layer) for layer in d["conv"]),
                   latent_dim=int(d["latent_dim"]),
                   input_hw=int(d["input_hw"]),
                   input_channels=int(d["input_channels"]))


class Encoder:
    """Three conv layers plus a dense head mapping an 84x84x3 uint8 image
    batch to a latent vector; ReLU activations throughout."""

    def __init__(self, spec: EncoderSpec, rng: np.random.Generator):
        self.spec = spec
        self.layers: List[Conv2d] = []
        in_ch = spec.input_channels
        for out_ch, kernel, stride in spec.conv:
            self.layers.append(Conv2d(in_ch, out_ch, kernel, stride, rng))
            in_ch = out_ch
        self.head = Dense(spec.flat_dim(), spec.latent_dim, rng)

    def __call__(self, obs: np.ndarray) -> Tensor:
        return self.forward(self.prepare(obs))

    @staticmethod
    def prepare(obs: np.ndarray) -> Tensor:
        """uint8 (B, H, W, 3) or (H, W, 3) image to a float (B, 3, H, W)
        tensor scaled to [0, 1]."""
        arr = np.asarray(obs)
        if arr.ndim == 3:
            arr = arr[None]
        return Tensor(arr.transpose(0, 3, 1, 2).astype(np.float64) / 255.0)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x).relu()
        x = x.reshape(x.shape[0], -1)
        return self.head(x).relu()

    def named_parameters(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.append(("conv%d.w" % i, layer.w))
            out.append(("conv%d.b" % i, layer.b))
        out.append(("head.w", self.head.w))
        out.append(("head.b", self.head.b))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def load_state(self, arrays: dict):
        for name, p in self.named_parameters():
            src = arrays[name]
            if src.shape != p.data.shape:
                raise ValueError("parameter %s: shape mismatch: %s vs %s"
                                 % (name, src.shape, p.data.shape))
            p.data = src.astype(np.float64).copy()

    def state_arrays(self):
        return [(name, p.data.copy()) for name, p in self.named_parameters()]
