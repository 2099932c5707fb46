"""Input validation helpers used by the estimators and metric functions."""

import numpy as np


def check_uplink(X, n_antennas=None, n_subcarriers=None):
    """Return ``X`` as a complex array of shape (n_samples, M, U).

    A single (M, U) matrix is promoted to a batch of one.
    """
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3:
        raise ValueError(f"uplink CSI must have shape (n, M, U), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("uplink CSI batch is empty")
    if n_antennas is not None and X.shape[1] != n_antennas:
        raise ValueError(f"expected {n_antennas} antennas, got {X.shape[1]}")
    if n_subcarriers is not None and X.shape[2] != n_subcarriers:
        raise ValueError(f"expected {n_subcarriers} uplink subcarriers, got {X.shape[2]}")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("uplink CSI contains non-finite values")
    return X


def check_downlink(y, n_antennas=None, n_samples=None):
    """Return ``y`` as a complex (n_samples, M) array with nonzero rows."""
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[np.newaxis]
    if y.ndim != 2:
        raise ValueError(f"downlink CSI must have shape (n, M), got {y.shape}")
    if n_antennas is not None and y.shape[1] != n_antennas:
        raise ValueError(f"expected {n_antennas} antennas, got {y.shape[1]}")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} downlink targets, got {y.shape[0]}")
    y = y.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(y)):
        raise ValueError("downlink CSI contains non-finite values")
    if np.any(np.linalg.norm(y, axis=1) == 0):
        raise ValueError("downlink CSI contains a zero-norm vector")
    return y


def check_positions(positions, n_samples=None):
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim == 1:
        positions = positions[np.newaxis]
    if positions.ndim != 2 or positions.shape[1] not in (2, 3):
        raise ValueError(f"positions must have shape (n, 3), got {positions.shape}")
    if n_samples is not None and positions.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} positions, got {positions.shape[0]}")
    if not np.all(np.isfinite(positions)):
        raise ValueError("positions contain non-finite values")
    return positions


def check_random_state(seed):
    """Map ``None``/int/Generator onto a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
