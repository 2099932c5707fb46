"""Normalized received power, its dataset mean, and the two analytic baselines."""

from __future__ import annotations

import math
import warnings

import numpy as np

from ._validation import check_random_state
from .dataset import as_sample_set
from .exceptions import ConvergenceError, DegenerateSpectrumError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


def to_db(p):
    return 10.0 * np.log10(p)


def normalized_power(h_D, w):
    """Squared cosine similarity ``|h^H w|^2 / (||h||^2 ||w||^2)``.

    Works row-wise on stacked (n, M) inputs and returns an array then;
    1-D inputs give a float.
    """
    h = np.asarray(h_D, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    nh = np.sum(np.abs(h) ** 2, axis=-1)
    nw = np.sum(np.abs(w) ** 2, axis=-1)
    if np.any(nh == 0) or np.any(nw == 0):
        raise ValueError("normalized power is undefined for zero-norm vectors")
    inner = np.sum(np.conj(h) * w, axis=-1)
    p = np.abs(inner) ** 2 / (nh * nw)
    p = np.minimum(p, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def _predict(estimator, H_U):
    if hasattr(estimator, "predict"):
        return np.asarray(estimator.predict(H_U))
    return np.stack([np.asarray(estimator(H)) for H in H_U])


def sample_powers(pairs, estimator):
    """Per-pair normalized power of ``estimator`` on ``pairs``.

    ``estimator`` is anything with ``predict(H_U_batch)`` or a plain callable
    taking one uplink matrix.
    """
    samples = as_sample_set(pairs)
    if len(samples) == 0:
        raise ValueError("no sample pairs")
    return normalized_power(samples.h_D, _predict(estimator, samples.H_U))


def mean_power(powers):
    """Linear-domain mean with compensated summation."""
    powers = np.ravel(powers)
    if powers.size == 0:
        raise ValueError("cannot average an empty set of powers")
    return math.fsum(powers.tolist()) / powers.size


def mean_power_db(pairs, estimator):
    """Average normalized power over ``pairs`` in dB (mean taken in the linear domain)."""
    return float(to_db(mean_power(sample_powers(pairs, estimator))))


def random_precoders(rng, n, M):
    """``n`` independent unit vectors ``v / ||v||`` with ``v ~ CN(0, I_M)``."""
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = check_random_state(rng)
    v = rng.normal(size=(n, M)) + 1j * rng.normal(size=(n, M))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_precoder(seed, M):
    return random_precoders(seed, 1, M)[0]


def autocorrelation(targets):
    """Dataset estimate of ``E[h h^H / ||h||^2]`` (Hermitian, PSD, unit trace)."""
    h = np.asarray(targets, dtype=np.complex128)
    if h.ndim == 1:
        h = h[np.newaxis]
    if h.ndim != 2 or h.shape[0] == 0:
        raise ValueError("targets must be a non-empty (n, M) collection")
    norms = np.linalg.norm(h, axis=1)
    if np.any(norms == 0):
        raise ValueError(f"target {int(np.argmin(norms))} has zero norm")
    u = h / norms[:, None]
    R = u.T @ u.conj() / h.shape[0]
    return (R + R.conj().T) / 2


def _rayleigh(R, x):
    return float(np.real(np.vdot(x, R @ x)))


def _power_iterate(R, x, tol, max_iter):
    lam = _rayleigh(R, x)
    for it in range(1, max_iter + 1):
        y = R @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return x, 0.0, 0.0, it
        x = y / ny
        lam = _rayleigh(R, x)
        res = np.linalg.norm(R @ x - lam * x)
        if res <= tol:
            return x, lam, res, it
    return x, lam, res, max_iter


def dominant_eigenvector(R, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0, gap_tol=None):
    """Leading eigenpair of a Hermitian PSD matrix by power iteration.

    The start vector is the normalized all-ones vector plus a tiny seeded
    perturbation; a start that collapses onto the null space is restarted
    from a fresh random vector. The returned vector is phase-normalized so
    its largest entry is real positive.

    Raises :class:`ConvergenceError` when the residual ``||R w - lam w||``
    stays above ``tol`` after ``max_iter`` iterations, and
    :class:`DegenerateSpectrumError` when the second eigenvalue lies within
    ``gap_tol`` (default ``tol``) of the first.
    """
    R = np.asarray(R, dtype=np.complex128)
    M = R.shape[0]
    if R.shape != (M, M):
        raise ValueError("R must be square")
    if tol <= 0:
        raise ValueError("tol must be positive")
    gap_tol = tol if gap_tol is None else gap_tol
    rng = np.random.default_rng(seed)
    x = np.ones(M, dtype=np.complex128) + 1e-6 * (rng.normal(size=M) + 1j * rng.normal(size=M))
    x /= np.linalg.norm(x)
    w, lam, res, _ = _power_iterate(R, x, tol, max_iter)
    if lam == 0.0 and np.linalg.norm(R) > 0:
        x = rng.normal(size=M) + 1j * rng.normal(size=M)
        w, lam, res, _ = _power_iterate(R, x / np.linalg.norm(x), tol, max_iter)
    w = w * np.exp(-1j * np.angle(w[np.argmax(np.abs(w))]))
    if res > tol:
        raise ConvergenceError(
            f"power iteration residual {res:.3e} > {tol:.1e} after {max_iter} iterations; "
            "leading eigenvalues are probably nearly degenerate"
        )
    gap = lam - second_eigenvalue(R, w, seed=seed)
    if gap < gap_tol:
        raise DegenerateSpectrumError(
            f"leading eigenvalue {lam:.6g} is degenerate (gap {gap:.3e} < {gap_tol:.1e})",
            vector=w, eigenvalue=lam, gap=gap,
        )
    return w, lam


def second_eigenvalue(R, w, seed=0, n_iter=500):
    """Estimate the runner-up eigenvalue by power iteration on ``R`` restricted to ``w``'s complement."""
    M = R.shape[0]
    if M == 1:
        return -np.inf
    P = np.eye(M) - np.outer(w, w.conj())
    A = P @ R @ P
    rng = np.random.default_rng(seed + 1)
    x = P @ (rng.normal(size=M) + 1j * rng.normal(size=M))
    x /= np.linalg.norm(x)
    _, lam, _, _ = _power_iterate(A, x, 1e-14, n_iter)
    return lam


def principal_component_baseline(train_targets, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Constant precoder maximizing the mean normalized power on ``train_targets``."""
    R = autocorrelation(train_targets)
    try:
        w, _ = dominant_eigenvector(R, tol, max_iter)
    except DegenerateSpectrumError as err:
        warnings.warn(str(err), RuntimeWarning, stacklevel=2)
        w = err.vector
    return w
