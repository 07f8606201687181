import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from nfupa.gamp import GampConfig, gamp_gaussian, posterior_direct
from nfupa.selftest import ORACLE_GAMP, random_gaussian_instance


def dense_oracle(phi, y, eta, gamma):
    """Posterior by explicit inversion, independent of the Cholesky path."""
    Psi = np.linalg.inv(gamma * phi.conj().T @ phi + np.diag(eta))
    return gamma * Psi @ phi.conj().T @ y, np.real(np.diag(Psi))


def instance(rng, T=64, N=32, gamma=100.0):
    phi = (rng.standard_normal((T, N)) + 1j * rng.standard_normal((T, N))) / np.sqrt(2 * T)
    y = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    return phi, y, rng.uniform(0.1, 10, N), gamma


def test_config_validation():
    for bad in (dict(max_inner_iters=0), dict(damping=0.0), dict(damping=1.5), dict(tol=0), dict(variance_floor=-1)):
        with pytest.raises(ValueError):
            GampConfig(**bad)


def test_direct_matches_inverse_oracle(rng):
    phi, y, eta, gamma = instance(rng)
    post = posterior_direct(phi, y, eta, gamma)
    mu, var = dense_oracle(phi, y, eta, gamma)
    np.testing.assert_allclose(post.mean, mu, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(post.variance, var, rtol=1e-10)
    lhs = (gamma * phi.conj().T @ phi + np.diag(eta)) @ post.mean
    np.testing.assert_allclose(lhs, gamma * phi.conj().T @ y, atol=1e-9)


def test_direct_trivial_cases(rng):
    y = rng.standard_normal(5) + 0j
    post = posterior_direct(np.eye(5), y, np.ones(5), 1.0)
    np.testing.assert_allclose(post.mean, y / 2)
    np.testing.assert_allclose(post.variance, 0.5)
    tight = posterior_direct(np.eye(5), y, np.full(5, 1e12), 1.0)
    assert np.max(np.abs(tight.mean)) < 1e-11


def test_direct_size_guard():
    with pytest.raises(ValueError):
        posterior_direct(np.zeros((1, 5000)), np.zeros(1), np.ones(5000), 1.0)


def test_gamp_matches_direct_on_reference_instance():
    rng = np.random.default_rng(0)
    phi, y, eta, gamma = instance(rng, T=64, N=32, gamma=100.0)
    g = gamp_gaussian(phi, y, eta, gamma)
    d = posterior_direct(phi, y, eta, gamma)
    assert np.linalg.norm(g.mean - d.mean) / np.linalg.norm(d.mean) < 1e-2
    assert g.converged and not g.diverged


@pytest.mark.parametrize("T,N", [(32, 16), (64, 16), (32, 32), (64, 32)])
def test_gamp_variances_within_factor_two(T, N):
    rng = np.random.default_rng(T + N)
    for _ in range(5):
        phi, y, eta, gamma = instance(rng, T, N)
        g = gamp_gaussian(phi, y, eta, gamma, ORACLE_GAMP)
        d = posterior_direct(phi, y, eta, gamma)
        ratio = g.variance / d.variance
        assert np.all((ratio > 0.5) & (ratio < 2.0))


def test_gamp_identity_noiseless(rng):
    # with phi = I the variance recursion shrinks like 1/t, so give it room
    y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    eta = rng.uniform(0.1, 10, 16)
    short = gamp_gaussian(np.eye(16), y, eta, 1e12, GampConfig(max_inner_iters=100))
    long = gamp_gaussian(np.eye(16), y, eta, 1e12, GampConfig(max_inner_iters=2000))
    np.testing.assert_allclose(long.mean, y, rtol=1e-3)
    assert np.all(long.variance < 1e-2) and np.all(long.variance < short.variance)


def test_gamp_zero_data(rng):
    phi, _, eta, gamma = instance(rng)
    g = gamp_gaussian(phi, np.zeros(64, complex), eta, gamma, ORACLE_GAMP)
    assert np.all(g.mean == 0)
    d = posterior_direct(phi, np.zeros(64, complex), eta, gamma)
    ratio = g.variance / d.variance
    assert np.all((ratio > 0.5) & (ratio < 2.0))


def test_gamp_scaling_covariance(rng):
    phi, y, eta, gamma = instance(rng)
    c = 0.3 - 2.1j
    for solve in (gamp_gaussian, posterior_direct):
        a, b = solve(phi, y, eta, gamma), solve(phi, c * y, eta, gamma)
        np.testing.assert_allclose(b.mean, c * a.mean, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(b.variance, a.variance, rtol=1e-12)


def test_gamp_deterministic_and_floored(rng):
    phi, y, eta, gamma = instance(rng)
    cfg = GampConfig(variance_floor=1e-3)
    a, b = gamp_gaussian(phi, y, eta, gamma, cfg), gamp_gaussian(phi, y, eta, gamma, cfg)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.variance, b.variance)
    assert np.all(a.variance >= 1e-3)


def test_gamp_warm_start_reaches_same_point(rng):
    phi, y, eta, gamma = instance(rng)
    cold = gamp_gaussian(phi, y, eta, gamma, ORACLE_GAMP)
    warm = gamp_gaussian(phi, y, eta * 1.01, gamma, ORACLE_GAMP, warm_start=cold)
    ref = posterior_direct(phi, y, eta * 1.01, gamma)
    assert np.linalg.norm(warm.mean - ref.mean) < 1e-6 * np.linalg.norm(ref.mean)
    assert warm.iters_used < cold.iters_used


def test_gamp_uniform_variance_mode(rng):
    phi, y, eta, gamma = instance(rng)
    g = gamp_gaussian(phi, y, eta, gamma, GampConfig(uniform_variance=True, max_inner_iters=500, tol=1e-8))
    d = posterior_direct(phi, y, eta, gamma)
    assert np.linalg.norm(g.mean - d.mean) / np.linalg.norm(d.mean) < 1e-2


def test_gamp_flags_divergence_and_keeps_best_iterate():
    # strongly correlated columns with no damping make the iteration blow up
    rng = np.random.default_rng(5)
    base = rng.standard_normal((40, 1)) + 1j * rng.standard_normal((40, 1))
    phi = base @ np.ones((1, 40)) + 1e-3 * rng.standard_normal((40, 40))
    y = phi @ np.ones(40)
    g = gamp_gaussian(phi, y, np.full(40, 1e-3), 1e6, GampConfig(damping=1.0, max_inner_iters=300))
    assert g.diverged and not g.converged
    assert np.all(np.isfinite(g.mean)) and np.all(np.isfinite(g.variance))


def test_gamp_input_validation(rng):
    phi, y, eta, gamma = instance(rng)
    with pytest.raises(ValueError):
        gamp_gaussian(phi, y, -eta, gamma)
    with pytest.raises(ValueError):
        gamp_gaussian(phi, y, eta, 0.0)
    with pytest.raises(ValueError):
        gamp_gaussian(phi, y[:-1], eta, gamma)
    with pytest.raises(ValueError):
        posterior_direct(phi, y, np.zeros_like(eta), gamma)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_gamp_oracle_property(seed):
    rng = np.random.default_rng(seed)
    phi, y, eta, gamma = random_gaussian_instance(rng)
    g = gamp_gaussian(phi, y, eta, gamma, ORACLE_GAMP)
    d = posterior_direct(phi, y, eta, gamma)
    assert np.linalg.norm(g.mean - d.mean) <= 1e-2 * np.linalg.norm(d.mean)
