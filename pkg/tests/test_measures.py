import numpy as np
import pytest

from ridgecert._util import UnsupportedOperation
from ridgecert.diagnostic import FeatureSubspace
from ridgecert.measures import (
    ReferenceMeasure,
    SobolevBudget,
    SobolevSource,
    TargetModel,
    c_beta_sub,
    gradient_fd_error,
    sample,
    sample_conditional,
)

from conftest import random_spd


def test_standard_gaussian_mean():
    n = 10**6
    x = sample(ReferenceMeasure.standard_gaussian(2), n, 0)
    assert np.all(np.abs(x.mean(axis=0)) <= 4 / np.sqrt(n))


def test_gaussian_variance():
    x = sample(ReferenceMeasure.gaussian(np.diag([4.0, 1.0])), 10**6, 0)
    assert abs(x[:, 0].var() / 4.0 - 1.0) <= 0.05


def test_same_seed_is_bit_identical():
    mu = ReferenceMeasure.gaussian([[2.0, 0.3], [0.3, 1.0]])
    assert np.array_equal(sample(mu, 1000, 7), sample(mu, 1000, 7))
    assert not np.array_equal(sample(mu, 1000, 7), sample(mu, 1000, 8))


def test_bad_inputs():
    with pytest.raises(ValueError):
        sample(ReferenceMeasure.standard_gaussian(2), 0, 0)
    with pytest.raises(ValueError):
        ReferenceMeasure.gaussian([[1.0, 2.0], [2.0, 1.0]])
    custom = ReferenceMeasure.custom(2, SobolevBudget(1.0, 1.0))
    with pytest.raises(UnsupportedOperation):
        sample(custom, 3, 0)
    with pytest.raises(UnsupportedOperation):
        sample_conditional(custom, FeatureSubspace.from_basis(np.array([1.0, 0.0])), [0.0], 3, 0)


def test_custom_sampler_is_used():
    mu = ReferenceMeasure.custom(1, SobolevBudget(1, 1), sampler=lambda n, rng: rng.uniform(size=n))
    x = sample(mu, 100, 3)
    assert x.shape == (100, 1) and np.all((0 <= x) & (x < 1))


def test_conditional_fixes_features():
    mu = ReferenceMeasure.standard_gaussian(3)
    sub = FeatureSubspace.from_basis(np.array([1.0, 0.0, 0.0]))
    x = sample_conditional(mu, sub, [2.0], 10**5, 0)
    assert np.all(np.abs(x[:, 0] - 2.0) <= 1e-10)
    np.testing.assert_allclose(x[:, 1:].mean(axis=0), 0.0, atol=4 / np.sqrt(1e5))
    np.testing.assert_allclose(np.cov(x[:, 1:].T), np.eye(2), atol=0.02)


def test_conditional_full_and_empty_rank(rng):
    mu = ReferenceMeasure.standard_gaussian(3)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    theta = np.array([0.5, -1.0, 2.0])
    x = sample_conditional(mu, FeatureSubspace(q, np.zeros((3, 0))), theta, 5, 0)
    np.testing.assert_allclose(x, np.tile(q @ theta, (5, 1)), atol=1e-12)
    x0 = sample_conditional(mu, FeatureSubspace(np.zeros((3, 0)), np.eye(3)), [], 10**5, 1)
    assert abs(x0.mean()) < 0.01 and abs(x0.var() - 1) < 0.02


def test_conditional_respects_constraint_for_correlated_gaussian(rng):
    sigma = random_spd(rng, 4)
    mu = ReferenceMeasure.gaussian(sigma)
    q, _ = np.linalg.qr(rng.standard_normal((4, 2)))
    sub = FeatureSubspace.from_basis(q)
    theta = np.array([0.3, -0.7])
    x = sample_conditional(mu, sub, theta, 2000, 4)
    assert np.max(np.linalg.norm(x @ q - theta, axis=1)) <= 1e-10


def _reconstruct(mu, sub, n, seed):
    theta = sample(mu, n, seed) @ sub.u_r
    return np.concatenate([sample_conditional(mu, sub, th, 1, (seed, i)) for i, th in enumerate(theta)])


def test_disintegration_reproduces_gaussian(rng):
    sigma = np.array([[2.0, 0.6, 0.1], [0.6, 1.0, -0.3], [0.1, -0.3, 0.5]])
    mu = ReferenceMeasure.gaussian(sigma)
    q, _ = np.linalg.qr(rng.standard_normal((3, 1)))
    n = 20000
    x = _reconstruct(mu, FeatureSubspace.from_basis(q), n, 11)
    se_mean = np.sqrt(np.diag(sigma) / n)
    assert np.all(np.abs(x.mean(axis=0)) <= 5 * se_mean)
    # sample covariance entries have variance (s_ii s_jj + s_ij^2)/n
    se_cov = np.sqrt((np.outer(np.diag(sigma), np.diag(sigma)) + sigma**2) / n)
    assert np.all(np.abs(np.cov(x.T) - sigma) <= 5 * se_cov)


def test_identity_covariance_matches_standard_path():
    a = sample(ReferenceMeasure.gaussian(np.eye(3)), 10**5, 0)
    b = sample(ReferenceMeasure.standard_gaussian(3), 10**5, 1)
    n = 10**5
    assert np.all(np.abs(a.mean(0) - b.mean(0)) <= 5 * np.sqrt(2 / n))
    assert np.all(np.abs(a.var(0) - b.var(0)) <= 5 * np.sqrt(4 / n))


def test_budgets():
    assert c_beta_sub(ReferenceMeasure.standard_gaussian(3).sobolev, 1.5) == 1.0
    assert c_beta_sub(SobolevBudget(0.0, 3.0), 4.0) == 6.0
    b = SobolevBudget.bakry_emery_holley_stroock(2.0, 0.0)
    assert b.source is SobolevSource.BAKRY_EMERY_HOLLEY_STROOCK
    assert c_beta_sub(b, 1.0) == c_beta_sub(b, 2.0) == 0.5
    b = SobolevBudget.bakry_emery_holley_stroock(1.0, np.log(3.0))
    assert b.c1_sub == b.c2_sub == pytest.approx(3.0)
    assert c_beta_sub(SobolevBudget(0.2, 0.7), 1.0) == 0.7
    with pytest.raises(ValueError):
        c_beta_sub(b, 0.5)
    with pytest.raises(ValueError):
        SobolevBudget(-1.0, 1.0)
    with pytest.raises(ValueError):
        SobolevBudget.bakry_emery_holley_stroock(0.0, 1.0)
    assert ReferenceMeasure.gaussian(np.diag([4.0, 1.0])).sobolev.c1_sub == pytest.approx(4.0)


def test_gradient_finite_difference_is_second_order(rng):
    a = rng.standard_normal((3, 3))
    t = TargetModel(
        3,
        lambda x: -0.25 * np.sum((x @ a.T) ** 2, axis=1) + np.sin(x[:, 0]),
        lambda x: -0.5 * x @ a.T @ a + np.column_stack([np.cos(x[:, 0]), 0 * x[:, 1], 0 * x[:, 2]]),
    )
    x = rng.standard_normal((20, 3))
    v = rng.standard_normal((20, 3))
    e3 = gradient_fd_error(t, x, v, 1e-3)
    e4 = gradient_fd_error(t, x, v, 1e-4)
    assert np.all(e3 <= 1e-5) and np.all(e4 <= 1e-7)
    with pytest.raises(UnsupportedOperation):
        TargetModel(1, lambda x: x[:, 0]).grad_batch(np.zeros((1, 1)))
