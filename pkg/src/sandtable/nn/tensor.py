"""Reverse-mode autodiff over float64 numpy arrays.

Deliberately small: only the operators the agents actually use. Graphs are
built eagerly by the ops below and released after backward(). Two graphs
never share state unless they share leaf tensors.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor"]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    if grad.shape == shape:
        return grad
    # sum out prepended axes, then axes that were size 1
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _shapes_compatible(a: tuple, b: tuple) -> bool:
    try:
        np.broadcast_shapes(a, b)
        return True
    except ValueError:
        return False


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._prev = ()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls(data)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._prev = tuple(parents)
            out._backward = backward
        return out

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return "Tensor(shape=%s, grad=%s)" % (self.shape, self.requires_grad)

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- arithmetic -------------------------------------------------------------

    def _check_broadcast(self, other, op):
        if not _shapes_compatible(self.data.shape, other.data.shape):
            raise ValueError("%s: shape mismatch: %s vs %s"
                             % (op, self.data.shape, other.data.shape))

    def __add__(self, other):
        other = self._lift(other)
        self._check_broadcast(other, "add")
        out = Tensor._from_op(self.data + other.data, (self, other), None)

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g, other.data.shape))

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor._from_op(-self.data, (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(-g)

        out._backward = backward
        return out

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        self._check_broadcast(other, "mul")
        out = Tensor._from_op(self.data * other.data, (self, other), None)

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g * self.data, other.data.shape))

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        return self * other ** -1.0

    def __rtruediv__(self, other):
        return self._lift(other) * self ** -1.0

    def __pow__(self, exponent):
        if not np.isscalar(exponent):
            raise TypeError("only scalar exponents are supported")
        out = Tensor._from_op(self.data ** exponent, (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g * exponent * self.data ** (exponent - 1))

        out._backward = backward
        return out

    def __matmul__(self, other):
        other = self._lift(other)
        if self.data.shape[-1] != other.data.shape[0]:
            raise ValueError("matmul: shape mismatch: %s vs %s"
                             % (self.data.shape, other.data.shape))
        out = Tensor._from_op(self.data @ other.data, (self, other), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g @ other.data.T)
            if other.requires_grad:
                other._accum(self.data.T @ g)

        out._backward = backward
        return out

    # -- pointwise nonlinearities -------------------------------------------

    def exp(self):
        val = np.exp(self.data)
        out = Tensor._from_op(val, (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g * val)

        out._backward = backward
        return out

    def log(self):
        out = Tensor._from_op(np.log(self.data), (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g / self.data)

        out._backward = backward
        return out

    def relu(self):
        mask = self.data > 0.0
        out = Tensor._from_op(np.where(mask, self.data, 0.0), (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g * mask)

        out._backward = backward
        return out

    def maximum(self, other):
        other = self._lift(other)
        self._check_broadcast(other, "maximum")
        pick_self = self.data >= other.data  # ties go to the left operand
        out = Tensor._from_op(np.where(pick_self, self.data, other.data),
                              (self, other), None)

        def backward(g):
            if self.requires_grad:
                self._accum(_unbroadcast(g * pick_self, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g * ~pick_self, other.data.shape))

        out._backward = backward
        return out

    def minimum(self, other):
        other = self._lift(other)
        return -((-self).maximum(-other))

    def clip(self, lo: float, hi: float):
        """Clamp to [lo, hi]; gradient is zero outside the interval."""
        inside = (self.data >= lo) & (self.data <= hi)
        out = Tensor._from_op(np.clip(self.data, lo, hi), (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g * inside)

        out._backward = backward
        return out

    # -- shape ops ----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor._from_op(self.data.reshape(shape), (self,), None)

        def backward(g):
            if self.requires_grad:
                self._accum(g.reshape(self.data.shape))

        out._backward = backward
        return out

    def transpose(self, *axes):
        axes = axes or None
        out = Tensor._from_op(self.data.transpose(axes), (self,), None)
        inverse = np.argsort(axes) if axes else None

        def backward(g):
            if self.requires_grad:
                self._accum(g.transpose(inverse))

        out._backward = backward
        return out

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor._from_op(self.data.sum(axis=axis, keepdims=keepdims),
                              (self,), None)

        def backward(g):
            if not self.requires_grad:
                return
            if axis is None:
                self._accum(np.full_like(self.data, 1.0) * g)
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accum(np.broadcast_to(g, self.data.shape).copy())

        out._backward = backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def gather(self, index):
        """Row-wise pick: out[i] = self[i, index[i]] for a 2-D tensor."""
        idx = np.asarray(index, dtype=np.int64)
        if self.data.ndim != 2 or idx.shape != (self.data.shape[0],):
            raise ValueError("gather: shape mismatch: %s vs %s"
                             % (self.data.shape, idx.shape))
        rows = np.arange(self.data.shape[0])
        out = Tensor._from_op(self.data[rows, idx], (self,), None)

        def backward(g):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, (rows, idx), g)
                self._accum(full)

        out._backward = backward
        return out

    # -- softmax family -------------------------------------------------------

    def log_softmax(self, axis: int = -1):
        m = self.data - self.data.max(axis=axis, keepdims=True)
        ls = m - np.log(np.exp(m).sum(axis=axis, keepdims=True))
        out = Tensor._from_op(ls, (self,), None)
        soft = np.exp(ls)

        def backward(g):
            if self.requires_grad:
                self._accum(g - soft * g.sum(axis=axis, keepdims=True))

        out._backward = backward
        return out

    def softmax(self, axis: int = -1):
        return self.log_softmax(axis=axis).exp()

    # -- convolution ----------------------------------------------------------

    def conv2d(self, weight: "Tensor", bias: "Tensor", stride: int):
        """Valid (unpadded) 2-D convolution. self: (B, C, H, W), weight:
        (F, C, k, k), bias: (F,). Returns (B, F, Ho, Wo)."""
        x, w = self.data, weight.data
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
            raise ValueError("conv2d: shape mismatch: %s vs %s"
                             % (x.shape, w.shape))
        batch, _, h, width = x.shape
        filters, chans, k, k2 = w.shape
        if k != k2:
            raise ValueError("conv2d: kernel must be square, got %s" % (w.shape,))
        ho = (h - k) // stride + 1
        wo = (width - k) // stride + 1
        if ho < 1 or wo < 1:
            raise ValueError("conv2d: shape mismatch: %s vs %s"
                             % (x.shape, w.shape))
        win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
        win = win[:, :, ::stride, ::stride]          # (B, C, Ho, Wo, k, k)
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(batch * ho * wo, -1)
        wmat = w.reshape(filters, -1)
        val = cols @ wmat.T + bias.data
        val = val.reshape(batch, ho, wo, filters).transpose(0, 3, 1, 2)
        out = Tensor._from_op(val, (self, weight, bias), None)

        def backward(g):
            gmat = g.transpose(0, 2, 3, 1).reshape(-1, filters)
            if weight.requires_grad:
                weight._accum((gmat.T @ cols).reshape(w.shape))
            if bias.requires_grad:
                bias._accum(gmat.sum(axis=0))
            if self.requires_grad:
                dcols = (gmat @ wmat).reshape(batch, ho, wo, chans, k, k)
                dcols = dcols.transpose(0, 3, 1, 2, 4, 5)
                dx = np.zeros_like(x)
                for ki in range(k):
                    for kj in range(k):
                        dx[:, :, ki:ki + stride * ho:stride,
                           kj:kj + stride * wo:stride] += dcols[:, :, :, :, ki, kj]
                self._accum(dx)

        out._backward = backward
        return out

    # -- backward ---------------------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss, got shape %s"
                             % (self.data.shape,))
        order = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._prev:
                visit(p)
            order.append(t)

        visit(self)
        self._accum(np.ones_like(self.data))
        for t in reversed(order):
            if t._backward is not None:
                t._backward(t.grad)
        # release the graph so buffers can be collected
        for t in order:
            t._prev = ()
            t._backward = None
