"""Random-precoding and principal-component baselines as estimators."""

import warnings

import numpy as np
from sklearn.utils.validation import check_is_fitted

from ._validation import check_downlink
from .base import BasePrecoder
from .exceptions import DegenerateSpectrumError
from .metrics import DEFAULT_MAX_ITER, DEFAULT_TOL, autocorrelation, dominant_eigenvector, random_precoders


class RandomPrecoder(BasePrecoder):
    """Draws an independent isotropic unit vector for every sample.

    Ignores the channel entirely; its expected normalized power is 1/M for
    any channel distribution. ``predict`` is deterministic for a fixed
    integer ``random_state`` and needs no prior ``fit``.
    """

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._check_X(X)
        self.n_antennas_ = X.shape[1]
        self.n_uplink_subcarriers_ = X.shape[2]
        return self

    def predict(self, X):
        X = self._check_X(X)
        return random_precoders(self.random_state, X.shape[0], X.shape[1])


class PrincipalComponentPrecoder(BasePrecoder):
    """Constant precoder: dominant eigenvector of the normalized target autocorrelation.

    Attributes
    ----------
    autocorr_ : ndarray (M, M)
    eigenvalue_ : float
        Largest eigenvalue, equal to the training-set mean normalized power.
    w_max_ : ndarray (M,)
    """

    def __init__(self, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = self._record_fit(X)
        y = check_downlink(y, X.shape[1], X.shape[0])
        self.autocorr_ = autocorrelation(y)
        try:
            self.w_max_, self.eigenvalue_ = dominant_eigenvector(self.autocorr_, self.tol, self.max_iter)
            self.degenerate_ = False
        except DegenerateSpectrumError as err:
            warnings.warn(str(err), RuntimeWarning, stacklevel=2)
            self.w_max_, self.eigenvalue_ = err.vector, err.eigenvalue
            self.degenerate_ = True
        return self

    def predict(self, X):
        check_is_fitted(self, "w_max_")
        X = self._check_X(X)
        return np.tile(self.w_max_, (X.shape[0], 1))
