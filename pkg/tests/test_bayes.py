import numpy as np
import pytest

from ridgecert.bayes import (
    BayesModel,
    averaged_divergence_mc,
    certify_datafree,
    estimate_h_df,
    fisher_info,
    likelihood_target,
    linear_model,
)
from ridgecert.bounds import BoundFamily, certify
from ridgecert.diagnostic import DiagnosticMatrix, FeatureSubspace, eigh, select_features
from ridgecert.measures import ReferenceMeasure, SobolevBudget, gradient_fd_error
from ridgecert.oracle import exponential_spectrum, from_spectrum

GAUSS = SobolevBudget.analytic(1.0)


def _nonlinear_model():
    def forward(x):
        return np.column_stack([np.sin(x[:, 0]) + x[:, 1], 0.5 * x[:, 2] * x[:, 3] + x[:, 0], np.tanh(x[:, 1] - x[:, 2])])

    def jac(x):
        j = np.zeros((x.shape[0], 3, 4))
        j[:, 0, 0] = np.cos(x[:, 0])
        j[:, 0, 1] = 1.0
        j[:, 1, 0] = 1.0
        j[:, 1, 2] = 0.5 * x[:, 3]
        j[:, 1, 3] = 0.5 * x[:, 2]
        s = 1.0 - np.tanh(x[:, 1] - x[:, 2]) ** 2
        j[:, 2, 1] = s
        j[:, 2, 2] = -s
        return j

    return BayesModel(ReferenceMeasure.standard_gaussian(4), forward, jac, np.diag([0.5, 1.0, 2.0]))


def test_fisher_examples():
    np.testing.assert_allclose(fisher_info(linear_model([[1.0, 0.0]]), [0.3, -2.0]), np.diag([1.0, 0.0]))
    const = BayesModel(ReferenceMeasure.standard_gaussian(2), lambda x: np.ones((x.shape[0], 1)),
                       lambda x: np.zeros((x.shape[0], 1, 2)), [[1.0]])
    np.testing.assert_array_equal(fisher_info(const, [1.0, 1.0]), np.zeros((2, 2)))
    a = np.array([[1.0, 2.0], [0.5, -1.0]])
    x = [0.2, 0.1]
    np.testing.assert_allclose(fisher_info(linear_model(a, noise_cov=3.0 * np.eye(2)), x),
                               fisher_info(linear_model(a), x) / 3.0, rtol=1e-14)
    with pytest.raises(ValueError):
        fisher_info(linear_model(a, noise_cov=np.diag([1.0, 0.0])), x)


def test_fisher_is_expected_score_outer_product():
    m = _nonlinear_model()
    x = np.array([0.3, -0.5, 1.2, 0.4])
    chol = np.linalg.cholesky(m.noise_cov)
    eps = np.random.default_rng(0).standard_normal((10**5, 3))
    ys = m.predict(x)[0] + eps @ chol.T
    scores = np.array([likelihood_target(m, y).grad_batch(x[None])[0] for y in ys[:20000]])
    emp = scores.T @ scores / scores.shape[0]
    exact = fisher_info(m, x)
    assert np.linalg.norm(emp - exact) <= 0.05 * np.linalg.norm(exact)


def test_likelihood_gradient_matches_finite_differences():
    m = _nonlinear_model()
    t = likelihood_target(m, [0.1, 1.0, -0.4])
    rng = np.random.default_rng(1)
    x, v = rng.standard_normal((10, 4)), rng.standard_normal((10, 4))
    assert np.all(gradient_fd_error(t, x, v, 1e-4) <= 1e-6)


def test_h_df_linear_is_exact():
    a = np.random.default_rng(2).standard_normal((3, 5))
    for n in (1, 7):
        np.testing.assert_allclose(estimate_h_df(linear_model(a), n, 0).h, a.T @ a, atol=1e-12)
    zero = linear_model(np.zeros((2, 3)))
    np.testing.assert_array_equal(estimate_h_df(zero, 10, 0).h, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        estimate_h_df(zero, 0, 0)


def test_h_df_eigenbasis_matches_forward_gram():
    a = np.random.default_rng(3).standard_normal((5, 5))
    u_df = eigh(estimate_h_df(linear_model(a), 3, 0)).eigenvectors
    u = eigh(DiagnosticMatrix(a.T @ a)).eigenvectors
    for r in range(1, 5):
        # sine of the largest principal angle; arccos of cosines cannot resolve below ~1e-8
        assert np.linalg.norm(u[:, r:].T @ u_df[:, :r], 2) <= 1e-8


def test_h_df_nonlinear_self_convergence():
    m = _nonlinear_model()
    ref = estimate_h_df(m, 10**7, 1).h
    h = estimate_h_df(m, 10**5, 2).h
    assert np.linalg.norm(h - ref) <= 0.02 * np.linalg.norm(ref)


def test_fisher_callback_overrides_formula():
    m = BayesModel(ReferenceMeasure.standard_gaussian(2), lambda x: x, lambda x: np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)),
                   np.eye(2), fisher=lambda x: np.diag([x[0] ** 2, 1.0]))
    h = estimate_h_df(m, 10**4, 0).h
    assert h[0, 0] == pytest.approx(1.0, abs=0.05) and h[1, 1] == 1.0


def test_certify_datafree_examples():
    spec = eigh(DiagnosticMatrix(np.diag([0.2])))
    assert certify_datafree(0.5, GAUSS, spec, 1).bound == 0.0
    c = certify_datafree(1.0, GAUSS, spec, 0)
    assert c.bound == pytest.approx(0.1)
    assert c.bound == certify(1.0, BoundFamily.BASIC, GAUSS, spec, 0).bound
    c = certify_datafree(0.5, GAUSS, eigh(DiagnosticMatrix(np.diag([1.0]))), 0)
    assert c.bound == pytest.approx(1.0) and c.notes
    with pytest.raises(ValueError):
        certify_datafree(0.0, GAUSS, spec, 0)


def test_averaged_divergence_vanishes_for_ridge_and_full_rank():
    a = np.array([[1.0, 2.0, 0.0, 0.0]])
    m = linear_model(a)
    row = FeatureSubspace.from_basis(a[0] / np.linalg.norm(a[0]))
    for alpha in (0.5, 1.0):
        est = averaged_divergence_mc(m, alpha, row, 5, 10**4, 0)
        assert est.value == pytest.approx(0.0, abs=1e-10)
    full = FeatureSubspace(np.eye(4), np.zeros((4, 0)))
    assert averaged_divergence_mc(m, 0.75, full, 3, 10**4, 0).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed,alpha", [(0, 0.75), (1, 1.0), (2, 0.5)])
def test_averaged_divergence_below_datafree_certificate(seed, alpha):
    p = from_spectrum(exponential_spectrum(4, 0.5, 1.5), seed=seed)
    m = linear_model(p.a)
    spec = eigh(estimate_h_df(m, 1, 0))
    est = averaged_divergence_mc(m, alpha, select_features(spec, 1), 20, 4 * 10**4, seed)
    assert est.value <= certify_datafree(alpha, GAUSS, spec, 1).bound + 3 * est.std_error
