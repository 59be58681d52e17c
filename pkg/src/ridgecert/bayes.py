"""Data-free dimension reduction for Bayesian inverse problems with Gaussian noise.

Model: Y = G(X) + eps with X ~ prior and eps ~ N(0, Gamma). The data-free
diagnostic matrix is the prior average of the Fisher information
I(x) = grad G(x)^T Gamma^{-1} grad G(x); its eigenvalue tail certifies the
reduction error averaged over data realizations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._util import make_rng
from .bounds import BoundFamily, Certificate, make_certificate
from .diagnostic import DiagnosticMatrix, FeatureSubspace, Spectrum, tail_sum
from .divergence import DivergenceEstimate
from .linalg import check_spd
from .measures import ReferenceMeasure, SobolevBudget, TargetModel, c_beta_sub, sample
from .profile import ProfileSpec, _d_opt_from_pool, _nested_pool, split_budget


class NoiseFamily(enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class BayesModel:
    """Forward model with additive Gaussian noise.

    ``forward`` maps an (n, d) array of states to (n, m) predictions and
    ``forward_jac`` maps it to the (n, m, d) stack of Jacobians. ``fisher``
    optionally overrides the Gaussian Fisher formula with a per-point callback
    x -> (d, d) matrix.
    """

    prior: ReferenceMeasure
    forward: Callable[[np.ndarray], np.ndarray]
    forward_jac: Callable[[np.ndarray], np.ndarray]
    noise_cov: np.ndarray
    family: NoiseFamily = NoiseFamily.GAUSSIAN
    fisher: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _chol: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        gamma = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        object.__setattr__(self, "noise_cov", gamma)
        try:
            check_spd(gamma, "noise covariance")
        except ValueError:
            return  # singular noise is reported when the Fisher information is requested
        object.__setattr__(self, "_chol", np.linalg.cholesky(gamma))

    @property
    def dim(self) -> int:
        return self.prior.dim

    def noise_chol(self) -> np.ndarray:
        if self._chol is None:
            raise ValueError("noise covariance must be symmetric positive definite")
        return self._chol

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.asarray(self.forward(x), dtype=float).reshape(x.shape[0], -1)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        m = self.noise_cov.shape[0]
        return np.asarray(self.forward_jac(x), dtype=float).reshape(x.shape[0], m, x.shape[1])


def linear_model(a, prior: Optional[ReferenceMeasure] = None, noise_cov=None) -> BayesModel:
    """G(x) = A x; standard Gaussian prior and identity noise unless given."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    m, d = a.shape
    prior = prior or ReferenceMeasure.standard_gaussian(d)
    gamma = np.eye(m) if noise_cov is None else noise_cov
    return BayesModel(
        prior,
        lambda x: x @ a.T,
        lambda x: np.broadcast_to(a, (x.shape[0], m, d)),
        gamma,
    )


def _fisher_batch(model: BayesModel, x: np.ndarray) -> np.ndarray:
    # sum_i I(x_i) for a chunk of states
    if model.fisher is not None:
        return sum(np.asarray(model.fisher(xi), dtype=float) for xi in x)
    chol = model.noise_chol()
    w = np.linalg.solve(chol[None], model.jacobian(x))
    return np.einsum("kmi,kmj->ij", w, w)


def fisher_info(model: BayesModel, x) -> np.ndarray:
    """grad G(x)^T Gamma^{-1} grad G(x) at a single state x."""
    x = np.asarray(x, dtype=float).reshape(1, model.dim)
    f = _fisher_batch(model, x)
    return 0.5 * (f + f.T)


def estimate_h_df(model: BayesModel, n: int, seed, chunk: int = 100_000) -> DiagnosticMatrix:
    """Plain prior Monte Carlo average of the Fisher information."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = np.zeros((model.dim, model.dim))
    for k, start in enumerate(range(0, n, chunk)):
        x = sample(model.prior, min(chunk, n - start), (seed, "h_df", k))
        total += _fisher_batch(model, x)
    h = total / n
    return DiagnosticMatrix(0.5 * (h + h.T), float(n))


def certify_datafree(alpha: float, budget: SobolevBudget, spec: Spectrum, r: int) -> Certificate:
    """Bound on the data-averaged D_alpha of the optimal rank-r reduction."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    c = c_beta_sub(budget, min(1.0 / alpha, 2.0))
    return make_certificate(alpha, BoundFamily.DATA_FREE, c, tail_sum(spec, r))


def likelihood_target(model: BayesModel, y) -> TargetModel:
    """Log-likelihood x -> -|Gamma^{-1/2}(y - G(x))|^2 / 2 as a target model."""
    y = np.asarray(y, dtype=float).reshape(-1)
    chol = model.noise_chol()

    def log_l(x):
        resid = np.linalg.solve(chol, (y[None, :] - model.predict(x)).T)
        return -0.5 * np.sum(resid**2, axis=0)

    def grad(x):
        resid = y[None, :] - model.predict(x)
        v = np.linalg.solve(chol.T, np.linalg.solve(chol, resid.T)).T
        return np.einsum("km,kmd->kd", v, model.jacobian(x))

    return TargetModel(model.dim, log_l, grad)


def averaged_divergence_mc(
    model: BayesModel,
    alpha: float,
    subspace: FeatureSubspace,
    n_data: int,
    n_mc: int,
    seed: int,
) -> DivergenceEstimate:
    """Average over prior-predictive data of D_alpha(pi^y || pi^y_opt) for a fixed subspace.

    Each realization draws x from the prior and y = G(x) + noise, then estimates
    the optimal-profile divergence from a nested pool of about n_mc draws.
    The standard error is the spread across realizations over sqrt(n_data).
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n_data < 2:
        raise ValueError("n_data must be >= 2")
    n_outer, n_inner = split_budget(n_mc)
    chol = model.noise_chol()
    values = np.empty(n_data)
    for k in range(n_data):
        x = sample(model.prior, 1, (seed, "data", k))
        eps = make_rng(seed, "noise", k).standard_normal(chol.shape[0])
        y = model.predict(x)[0] + chol @ eps
        spec = ProfileSpec(alpha, subspace, n_inner, seed)
        pool = _nested_pool(likelihood_target(model, y), model.prior, spec, max(2, n_outer), tag=f"data{k}")
        values[k] = _d_opt_from_pool(alpha, pool)[0]
    se = float(np.std(values, ddof=1) / np.sqrt(n_data))
    return DivergenceEstimate(alpha, float(values.mean()), se, n_data * n_outer * n_inner)
