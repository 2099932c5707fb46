"""Real-valued views of complex channel data.

Layout: antenna-major, subcarrier-minor, real part before imaginary part, so
``H[m, k]`` lands at indices ``2 * (m * U + k)`` and ``2 * (m * U + k) + 1``.
"""

import numpy as np


def flatten_input(H_U, n_subcarriers=None):
    """(M, U) -> (2 M U,) or (n, M, U) -> (n, 2 M U)."""
    H = np.asarray(H_U)
    if H.ndim not in (2, 3):
        raise ValueError(f"uplink CSI must be (M, U) or (n, M, U), got shape {H.shape}")
    if n_subcarriers is not None and H.shape[-1] != n_subcarriers:
        raise ValueError(f"expected {n_subcarriers} uplink subcarriers, got {H.shape[-1]}")
    out = np.stack([H.real, H.imag], axis=-1).astype(np.float64)
    return out.reshape(*H.shape[:-2], -1)


def unflatten_input(v, n_antennas, n_subcarriers):
    v = np.asarray(v, dtype=np.float64)
    pairs = v.reshape(*v.shape[:-1], n_antennas, n_subcarriers, 2)
    return pairs[..., 0] + 1j * pairs[..., 1]


def complex_from_real(v):
    """(…, 2M) interleaved (re, im) -> (…, M) complex."""
    v = np.asarray(v, dtype=np.float64)
    return v[..., 0::2] + 1j * v[..., 1::2]


def real_from_complex(h):
    h = np.asarray(h)
    return np.stack([h.real, h.imag], axis=-1).reshape(*h.shape[:-1], -1).astype(np.float64)


def normalize_rms(x):
    """Scale every row to unit root-mean-square entry (all-zero rows stay zero)."""
    x = np.asarray(x, dtype=np.float64)
    rms = np.sqrt(np.mean(x**2, axis=-1, keepdims=True))
    return np.divide(x, rms, out=np.zeros_like(x), where=rms > 0)
