"""Estimator base class shared by the baselines and the neural precoders.

Every precoder follows the scikit-learn protocol: ``fit(X, y)`` with uplink
CSI ``X`` of shape (n, M, U) and downlink targets ``y`` of shape (n, M), and
``predict(X)`` returning unit-norm precoding vectors of shape (n, M).
"""

import hashlib

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_uplink
from .metrics import mean_power, normalized_power, to_db


def training_digest(X):
    """Order-independent fingerprint of a batch of uplink matrices."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.complex128))
    per_sample = sorted(hashlib.sha1(x.tobytes()).digest() for x in X)
    h = hashlib.sha256()
    for d in per_sample:
        h.update(d)
    return h.hexdigest()


def unit_rows(w):
    w = np.asarray(w, dtype=np.complex128)
    norms = np.linalg.norm(w, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise FloatingPointError("estimator produced a zero-norm precoding vector")
    return w / norms


class BasePrecoder(BaseEstimator):
    """Adds shape bookkeeping, provenance and a dB ``score`` to estimators."""

    def _record_fit(self, X):
        X = check_uplink(X)
        self.n_antennas_ = X.shape[1]
        self.n_uplink_subcarriers_ = X.shape[2]
        self.train_digest_ = training_digest(X)
        return X

    def _check_X(self, X):
        return check_uplink(
            X,
            getattr(self, "n_antennas_", None),
            getattr(self, "n_uplink_subcarriers_", None),
        )

    def score(self, X, y):
        """Mean normalized power in dB (higher is better)."""
        w = self.predict(X)
        return float(to_db(mean_power(normalized_power(y, w))))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.required = True
        return tags
