"""Losses with exact analytic gradients."""

import numpy as np

from ..exceptions import FddCsiError
from .representation import complex_from_real


class ZeroOutputError(FddCsiError, FloatingPointError):
    """The network emitted an all-zero precoding vector."""


def cosine_loss_and_grad(raw, h_D, eps=0.0):
    """``1 - P(h_D, w)`` and its gradient with respect to the real output.

    ``raw`` holds interleaved (re, im) parts of the unnormalized estimate
    ``w``. For a single vector the loss is a float; for a batch (n, 2M) it is
    the batch mean and the gradient is that of the mean.

    With ``u = h^H w``, the Wirtinger derivative of P with respect to
    ``conj(w)`` is ``u h / (|h|^2 |w|^2) - |u|^2 w / (|h|^2 |w|^4)``; the
    real gradient is twice its (re, im) parts.
    """
    raw = np.asarray(raw, dtype=np.float64)
    single = raw.ndim == 1
    raw2 = np.atleast_2d(raw)
    h = np.atleast_2d(np.asarray(h_D, dtype=np.complex128))
    w = complex_from_real(raw2)
    nw = np.sum(np.abs(w) ** 2, axis=1)
    nh = np.sum(np.abs(h) ** 2, axis=1)
    if np.any(nh == 0):
        raise ValueError("target channel has zero norm")
    if np.any(nw <= eps):
        raise ZeroOutputError(f"{int(np.sum(nw <= eps))} network outputs have zero norm")
    u = np.sum(np.conj(h) * w, axis=1)
    p = np.abs(u) ** 2 / (nh * nw)
    dconj = (u / (nh * nw))[:, None] * h - (np.abs(u) ** 2 / (nh * nw**2))[:, None] * w
    grad = np.empty_like(raw2)
    grad[:, 0::2] = -2.0 * dconj.real
    grad[:, 1::2] = -2.0 * dconj.imag
    n = raw2.shape[0]
    if single:
        return float(1.0 - p[0]), grad[0]
    return float(np.mean(1.0 - p)), grad / n


def mse_loss_and_grad(pred, target):
    """Mean over samples of the summed squared error."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    diff = pred - target
    n = pred.shape[0]
    return float(np.sum(diff**2) / n), 2.0 * diff / n
