"""Multilayer perceptrons and their composition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Activation, Dense, Dropout


@dataclass(frozen=True)
class MlpSpec:
    """Dense stack ``layer_widths[0] -> ... -> layer_widths[-1]``.

    ``activation`` is one name for all hidden layers or one per hidden
    layer; the output layer is linear. ``dropout`` is ``(after_layer, rate)``
    with ``after_layer`` counting dense layers from 1.
    """

    layer_widths: tuple
    activation: str | tuple = "relu"
    dropout: tuple | None = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError(f"need at least input and output widths, all positive; got {widths}")
        object.__setattr__(self, "layer_widths", widths)
        n_hidden = len(widths) - 2
        acts = (self.activation,) * n_hidden if isinstance(self.activation, str) else tuple(self.activation)
        if len(acts) != n_hidden:
            raise ValueError(f"{len(acts)} activations for {n_hidden} hidden layers")
        for a in acts:
            if a not in Activation.KINDS:
                raise ValueError(f"unknown activation {a!r}")
        object.__setattr__(self, "activation", acts)
        if self.dropout is not None:
            after, rate = self.dropout
            if not 1 <= after < len(widths) - 1:
                raise ValueError(f"dropout must follow a hidden dense layer, got position {after}")
            if not 0.0 <= rate < 1.0:
                raise ValueError("dropout rate must lie in [0, 1)")
            object.__setattr__(self, "dropout", (int(after), float(rate)))

    @property
    def n_in(self):
        return self.layer_widths[0]

    @property
    def n_out(self):
        return self.layer_widths[-1]

    def to_dict(self):
        return {"layer_widths": list(self.layer_widths), "activation": list(self.activation),
                "dropout": list(self.dropout) if self.dropout else None}


@dataclass(frozen=True)
class EncoderDecoderSpec:
    encoder: MlpSpec
    decoder: MlpSpec
    latent_mode: str = "free"

    MODES = ("free", "azimuth", "azimuth_elevation")

    def __post_init__(self):
        if self.latent_mode not in self.MODES:
            raise ValueError(f"latent mode must be one of {self.MODES}")
        if self.encoder.n_out != self.decoder.n_in:
            raise ValueError(
                f"encoder output width {self.encoder.n_out} != decoder input width {self.decoder.n_in}"
            )
        forced = {"azimuth": 1, "azimuth_elevation": 2}.get(self.latent_mode)
        if forced is not None and self.latent_dim != forced:
            raise ValueError(f"{self.latent_mode} latent space has dimension {forced}, got {self.latent_dim}")

    @property
    def latent_dim(self):
        return self.decoder.n_in


class Sequential:
    """Blocks applied one after another; also the base for :class:`Mlp`."""

    def __init__(self, blocks):
        self.blocks = list(blocks)

    def params(self):
        return [p for b in self.blocks for p in b.params()]

    def forward(self, x, train=False, rng=None):
        caches = []
        for b in self.blocks:
            x, c = b.forward(x, train, rng)
            caches.append(c)
        return x, caches

    def backward(self, grad, caches):
        grads = []
        for b, c in zip(reversed(self.blocks), reversed(caches)):
            grad, g = b.backward(grad, c)
            grads.append(g)
        return grad, [g for gs in reversed(grads) for g in gs]

    def __call__(self, x):
        return self.forward(np.atleast_2d(x))[0]


class Mlp(Sequential):
    def __init__(self, spec: MlpSpec, seed=0):
        self.spec = spec
        rng = np.random.default_rng(seed)
        widths = spec.layer_widths
        blocks = []
        for i in range(len(widths) - 1):
            last = i == len(widths) - 2
            act = "linear" if last else spec.activation[i]
            blocks.append(Dense(widths[i], widths[i + 1], rng, gain=6.0 if act == "relu" else 3.0))
            if not last:
                blocks.append(Activation(act))
                if spec.dropout is not None and spec.dropout[0] == i + 1:
                    blocks.append(Dropout(spec.dropout[1]))
        super().__init__(blocks)

    @property
    def dense_layers(self):
        return [b for b in self.blocks if isinstance(b, Dense)]


class Parallel:
    """Feeds the same input to every branch and concatenates their outputs."""

    def __init__(self, branches):
        self.branches = list(branches)

    def params(self):
        return [p for b in self.branches for p in b.params()]

    def forward(self, x, train=False, rng=None):
        outs, caches = zip(*(b.forward(x, train, rng) for b in self.branches))
        widths = [o.shape[1] for o in outs]
        return np.concatenate(outs, axis=1), (list(caches), widths)

    def backward(self, grad, cache):
        caches, widths = cache
        grad_in, grads = 0.0, []
        edges = np.cumsum([0] + widths)
        for b, c, lo, hi in zip(self.branches, caches, edges[:-1], edges[1:]):
            gx, g = b.backward(grad[:, lo:hi], c)
            grad_in = grad_in + gx
            grads.extend(g)
        return grad_in, grads

    def __call__(self, x):
        return self.forward(np.atleast_2d(x))[0]


def forward(model, x, train_mode=False, seed=None):
    """Run ``model`` on ``x``; dropout masks are drawn from ``seed`` in train mode."""
    rng = np.random.default_rng(seed) if train_mode else None
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out, cache = model.forward(np.atleast_2d(x), train_mode, rng)
    return (out[0] if single else out), cache


def backward(model, grad_out, cache):
    """Parameter gradients (aligned with ``model.params()``) and the input gradient."""
    grad_out = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    grad_in, grads = model.backward(grad_out, cache)
    return grads, grad_in
