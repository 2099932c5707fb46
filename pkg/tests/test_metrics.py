import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from fddcsi.baselines import PrincipalComponentPrecoder, RandomPrecoder
from fddcsi.dataset import SamplePair
from fddcsi.exceptions import ConvergenceError, DegenerateSpectrumError
from fddcsi.metrics import (
    autocorrelation,
    dominant_eigenvector,
    mean_power_db,
    normalized_power,
    principal_component_baseline,
    random_precoder,
    random_precoders,
)


def jacobi_eigenvalues(R, sweeps=100):
    """Cyclic Jacobi on the real 2M x 2M embedding [[A, -B], [B, A]] of R = A + jB.

    Every eigenvalue of R appears twice in the embedding.
    """
    A = np.block([[R.real, -R.imag], [R.imag, R.real]])
    n = A.shape[0]
    for _ in range(sweeps):
        if np.sum((A - np.diag(np.diag(A))) ** 2) < 1e-30:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t ** 2 + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1][::2]


def random_trace_one_psd(rng, M, rank=None):
    G = crandn(rng, M, rank or M)
    R = G @ G.conj().T
    return R / np.trace(R).real


def pair(h_D):
    h_D = np.asarray(h_D, dtype=complex)
    return SamplePair(np.ones((h_D.size, 2), complex), h_D, np.zeros(3))


def test_power_hand_values():
    h = np.array([1.0, 0.0])
    assert normalized_power(h, np.array([0.0, 1.0])) == 0.0
    assert normalized_power(np.array([1, 1j]), np.array([1, 0])) == pytest.approx(0.5, abs=1e-15)
    for phi in np.linspace(-np.pi, np.pi, 9):
        assert normalized_power(h, np.exp(1j * phi) * h) == pytest.approx(1.0, abs=1e-15)


def test_power_rejects_zero_vectors():
    with pytest.raises(ValueError):
        normalized_power(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        normalized_power(np.ones(3), np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(
    M=st.integers(1, 16),
    seed=st.integers(0, 2**32 - 1),
    phi=st.floats(-np.pi, np.pi),
    log_scale=st.floats(-6, 6),
)
def test_power_bounded_and_invariant(M, seed, phi, log_scale):
    rng = np.random.default_rng(seed)
    h, w = crandn(rng, M), crandn(rng, M)
    p = normalized_power(h, w)
    assert 0.0 <= p <= 1.0
    c = 10.0 ** log_scale * np.exp(1j * phi)
    assert normalized_power(h, c * w) == pytest.approx(p, abs=1e-12)
    assert normalized_power(c * h, w) == pytest.approx(p, abs=1e-12)


def test_mean_power_db_hand_values():
    pairs = [pair([1, 0]), pair([0, 1])]
    db = mean_power_db(pairs, lambda H: np.array([1, 0]))
    assert db == pytest.approx(10 * np.log10(0.5), abs=1e-12)
    assert db == pytest.approx(-3.0103, abs=1e-4)


def test_exact_target_estimator_is_zero_db(rng):
    targets = crandn(rng, 10, 6)
    it = iter(targets)
    assert mean_power_db([pair(t) for t in targets], lambda H: next(it)) == pytest.approx(0.0, abs=1e-12)


def test_random_precoder_single_antenna_is_perfect(rng):
    for seed in range(5):
        w = random_precoder(seed, 1)
        assert abs(w[0]) == pytest.approx(1.0)
        assert normalized_power(crandn(rng, 1), w) == pytest.approx(1.0)


def test_random_precoder_deterministic_and_unit():
    a, b = random_precoders(3, 50, 8), random_precoders(3, 50, 8)
    assert a.tobytes() == b.tobytes()
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, rtol=1e-14)


def test_random_precoding_monte_carlo_two_antennas(rng):
    h = crandn(rng, 2)
    p = normalized_power(h, random_precoders(11, 100_000, 2))
    assert abs(p.mean() - 0.5) < 0.01


def test_random_precoding_monte_carlo_thirty_two_antennas(rng):
    h = crandn(rng, 32)
    p = normalized_power(h, random_precoders(12, 100_000, 32))
    assert abs(10 * np.log10(p.mean()) - 10 * np.log10(1 / 32)) < 0.2


def test_random_estimator_needs_no_fit(rng):
    est = RandomPrecoder(random_state=4)
    X = crandn(rng, 7, 4, 8)
    w = est.predict(X)
    assert w.shape == (7, 4)
    np.testing.assert_array_equal(w, RandomPrecoder(random_state=4).predict(X))


def test_autocorrelation_single_and_basis(rng):
    h = crandn(rng, 5)
    R = autocorrelation(h[None])
    np.testing.assert_allclose(R, np.outer(h, h.conj()) / np.vdot(h, h).real, atol=1e-15)
    assert np.linalg.matrix_rank(R) == 1
    assert np.trace(R).real == pytest.approx(1.0)
    np.testing.assert_allclose(autocorrelation(np.eye(4) * (1 + 2j)), np.eye(4) / 4, atol=1e-15)


def test_autocorrelation_matches_direct_sum(rng):
    targets = crandn(rng, 5, 4)
    oracle = np.zeros((4, 4), complex)
    for h in targets[::-1]:
        n2 = sum(abs(x) ** 2 for x in h)
        for i in range(4):
            for j in range(4):
                oracle[i, j] += h[i] * np.conj(h[j]) / n2
    oracle /= 5
    np.testing.assert_allclose(autocorrelation(targets), oracle, atol=1e-12, rtol=0)


@settings(max_examples=100, deadline=None)
@given(M=st.integers(1, 12), n=st.integers(1, 20), seed=st.integers(0, 2**32 - 1))
def test_autocorrelation_properties(M, n, seed):
    R = autocorrelation(crandn(np.random.default_rng(seed), n, M))
    np.testing.assert_allclose(R, R.conj().T, atol=0)
    assert np.trace(R).real == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.eigvalsh(R).min() > -1e-12


def test_dominant_eigenvector_diagonal():
    w, lam = dominant_eigenvector(np.diag([0.7, 0.3]))
    assert lam == pytest.approx(0.7, abs=1e-12)
    assert abs(abs(w[0]) - 1) < 1e-9
    assert abs(w[1]) < 1e-6


def test_dominant_eigenvector_flags_full_degeneracy():
    with pytest.raises(DegenerateSpectrumError) as info:
        dominant_eigenvector(np.eye(4) / 4)
    assert info.value.eigenvalue == pytest.approx(0.25)
    assert np.linalg.norm(info.value.vector) == pytest.approx(1.0)


def test_dominant_eigenvector_convergence_failure(rng):
    R = random_trace_one_psd(rng, 6)
    with pytest.raises(ConvergenceError):
        dominant_eigenvector(R, tol=1e-14, max_iter=2)


def test_dominant_eigenvector_matches_jacobi_oracle(rng):
    for _ in range(5):
        R = random_trace_one_psd(rng, 6)
        oracle = jacobi_eigenvalues(R)
        _, lam = dominant_eigenvector(R)
        assert abs(lam - oracle[0]) < 1e-8


def test_jacobi_oracle_self_check(rng):
    R = random_trace_one_psd(rng, 5)
    np.testing.assert_allclose(jacobi_eigenvalues(R), np.sort(np.linalg.eigvalsh(R))[::-1], atol=1e-12)


def test_principal_component_of_identical_targets(rng):
    h = crandn(rng, 6)
    targets = np.stack([np.exp(1j * k) * (k + 1) * h for k in range(10)])
    w = principal_component_baseline(targets)
    assert normalized_power(h, w) == pytest.approx(1.0, abs=1e-12)
    est = PrincipalComponentPrecoder().fit(crandn(rng, 10, 6, 2), targets)
    assert mean_power_db(list(map(pair, targets)), est) == pytest.approx(0.0, abs=1e-10)


def test_principal_component_beats_random_probes(rng):
    targets = crandn(rng, 40, 8) * np.linspace(2, 0.5, 8)
    w = principal_component_baseline(targets)
    best = normalized_power(targets, np.tile(w, (40, 1))).mean()
    probes = random_precoders(1, 1000, 8)
    for v in probes:
        assert best >= normalized_power(targets, np.tile(v, (40, 1))).mean()


def test_principal_component_estimator_attributes(rng):
    X, y = crandn(rng, 30, 4, 8), crandn(rng, 30, 4)
    est = PrincipalComponentPrecoder().fit(X, y)
    assert est.eigenvalue_ == pytest.approx(normalized_power(y, est.predict(X)).mean(), abs=1e-12)
    assert est.degenerate_ is False
    assert est.predict(X[:3]).shape == (3, 4)


def test_principal_component_degenerate_warns():
    with pytest.warns(RuntimeWarning, match="degenerate"):
        w = principal_component_baseline(np.eye(3))
    assert np.linalg.norm(w) == pytest.approx(1.0)
