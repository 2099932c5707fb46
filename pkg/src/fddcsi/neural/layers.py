"""Differentiable building blocks operating on (batch, features) arrays.

Each block exposes ``params()``, ``forward(x, train, rng) -> (y, cache)`` and
``backward(grad_y, cache) -> (grad_x, param_grads)``. Blocks never keep
per-call state, so a trained model can be shared between threads.
"""

import numpy as np


class Dense:
    def __init__(self, n_in, n_out, rng=None, gain=6.0):
        self.n_in, self.n_out = n_in, n_out
        rng = np.random.default_rng(rng)
        limit = np.sqrt(gain / n_in)
        self.W = rng.uniform(-limit, limit, size=(n_in, n_out))
        self.b = np.zeros(n_out)

    def params(self):
        return [self.W, self.b]

    def forward(self, x, train=False, rng=None):
        return x @ self.W + self.b, x

    def backward(self, grad, cache):
        x = cache
        return grad @ self.W.T, [x.T @ grad, grad.sum(axis=0)]


class Activation:
    KINDS = ("relu", "tanh", "linear")

    def __init__(self, kind):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}; expected one of {self.KINDS}")
        self.kind = kind

    def params(self):
        return []

    def forward(self, x, train=False, rng=None):
        if self.kind == "relu":
            return np.maximum(x, 0.0), x
        if self.kind == "tanh":
            y = np.tanh(x)
            return y, y
        return x, None

    def backward(self, grad, cache):
        if self.kind == "relu":
            return grad * (cache > 0), []
        if self.kind == "tanh":
            return grad * (1.0 - cache**2), []
        return grad, []


class Dropout:
    """Inverted dropout: survivors are scaled by 1 / (1 - rate) in training."""

    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        self.rate = rate

    def params(self):
        return []

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * mask, mask

    def backward(self, grad, cache):
        if cache is None:
            return grad, []
        return grad * cache, []


class AngleHead:
    """Maps a (sin, cos) pair onto the angle ``atan2(sin, cos)`` in (-pi, pi]."""

    def params(self):
        return []

    def forward(self, x, train=False, rng=None):
        s, c = x[:, 0], x[:, 1]
        angle = np.arctan2(s, c)
        angle = np.where(angle == -np.pi, np.pi, angle)
        return angle[:, None], x

    def backward(self, grad, cache):
        s, c = cache[:, 0], cache[:, 1]
        r2 = s**2 + c**2
        g = grad[:, 0]
        return np.column_stack([g * c / r2, -g * s / r2]), []
