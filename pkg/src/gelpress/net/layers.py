"""Differentiable building blocks with hand-wired backward passes.

Every layer caches what its backward pass needs, accumulates parameter
gradients into ``Param.grad`` and returns the gradient w.r.t. its input.
Image tensors are channels-last; all math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from . import kernels


@dataclass
class Param:
    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


def _fan_in_uniform(rng: np.random.Generator, shape, fan_in: int, gain: float = 1.0) -> np.ndarray:
    bound = gain / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2d:
    """3x3 convolution, He-uniform init (the encoder is a ReLU stack).
    ``need_input_grad=False`` skips the input gradient (first layer)."""

    def __init__(
        self,
        c_in: int,
        c_out: int,
        k: int,
        rng: np.random.Generator,
        pad: int = 1,
        need_input_grad: bool = True,
    ):
        fan = c_in * k * k
        self.pad = pad
        self.need_input_grad = need_input_grad
        self.weight = Param("weight", _fan_in_uniform(rng, (k, k, c_in, c_out), fan, np.sqrt(6.0)))
        self.bias = Param("bias", np.zeros(c_out))
        self._x = None
        self._cols = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        out, self._cols = kernels.conv2d_forward(
            x, self.weight.value, self.bias.value, 1, self.pad, return_cols=True
        )
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dx, dw, db = kernels.conv2d_backward(
            self._x, self.weight.value, dy, 1, self.pad, self.need_input_grad, cols=self._cols
        )
        self.weight.grad += dw
        self.bias.grad += db
        self._cols = None
        return dx

    def params(self):
        return [self.weight, self.bias]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask

    def params(self):
        return []


class MaxPool2d:
    def __init__(self):
        self._masks = None
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        out, self._masks = kernels.maxpool2d_forward(x)
        return out

    def backward(self, dy):
        return kernels.maxpool2d_backward(dy, self._masks, self._shape)

    def params(self):
        return []


class GlobalAvgPool:
    """(N, H, W, C) -> (N, C)."""

    def __init__(self):
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy):
        n, h, w, c = self._shape
        return np.broadcast_to(dy[:, None, None, :], self._shape) / (h * w)

    def params(self):
        return []


class Dense:
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.weight = Param("weight", _fan_in_uniform(rng, (d_out, d_in), d_in))
        self.bias = Param("bias", np.zeros(d_out))
        self._x = None

    def forward(self, x):
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, dy):
        self.weight.grad += dy.T @ self._x
        self.bias.grad += dy.sum(axis=0)
        return dy @ self.weight.value

    def params(self):
        return [self.weight, self.bias]


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class LSTMCell:
    """Standard gated cell. Gate order in the stacked weights: input, forget,
    candidate, output. Forget-gate bias starts at 1."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        d = d_hidden
        self.d_hidden = d
        self.w_x = Param("w_x", _fan_in_uniform(rng, (4 * d, d_in), d_in))
        self.w_h = Param("w_h", _fan_in_uniform(rng, (4 * d, d), d))
        bias = np.zeros(4 * d)
        bias[d : 2 * d] = 1.0
        self.bias = Param("bias", bias)

    def step(self, x: np.ndarray, h: np.ndarray, c: np.ndarray):
        if x.shape[0] != h.shape[0] or h.shape != c.shape:
            raise DomainError("LSTM state/input batch mismatch")
        d = self.d_hidden
        z = x @ self.w_x.value.T + h @ self.w_h.value.T + self.bias.value
        i = _sigmoid(z[:, :d])
        f = _sigmoid(z[:, d : 2 * d])
        g = np.tanh(z[:, 2 * d : 3 * d])
        o = _sigmoid(z[:, 3 * d :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        cache = (x, h, c, i, f, g, o, tc)
        return h_new, c_new, cache

    def step_backward(self, cache, dh: np.ndarray, dc: np.ndarray):
        """Returns (dx, dh_prev, dc_prev) and accumulates parameter grads."""
        x, h, c, i, f, g, o, tc = cache
        do = dh * tc
        dc_total = dc + dh * o * (1.0 - tc**2)
        di = dc_total * g
        df = dc_total * c
        dg = dc_total * i
        dz = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g**2), do * o * (1.0 - o)],
            axis=1,
        )
        self.w_x.grad += dz.T @ x
        self.w_h.grad += dz.T @ h
        self.bias.grad += dz.sum(axis=0)
        dx = dz @ self.w_x.value
        dh_prev = dz @ self.w_h.value
        dc_prev = dc_total * f
        return dx, dh_prev, dc_prev

    def params(self):
        return [self.w_x, self.w_h, self.bias]


def huber_loss(pred, target, kappa: float = 1.0):
    """Elementwise Huber loss and its gradient w.r.t. pred.

    Quadratic within |e| <= kappa, linear outside; continuous with continuous
    first derivative at the junction. Reduction is the caller's business.
    """
    if kappa <= 0:
        raise DomainError("huber kappa must be positive")
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    small = np.abs(e) <= kappa
    loss = np.where(small, 0.5 * e**2, kappa * (np.abs(e) - 0.5 * kappa))
    grad = np.where(small, e, kappa * np.sign(e))
    return loss, grad
