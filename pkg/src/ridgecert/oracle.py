"""Closed-form linear-Gaussian problem used as a test oracle.

Prior N(0, I_d), likelihood l(x) = exp(-|A x|^2 / 2) (data fixed at y = 0),
posterior N(0, (I + A^T A)^{-1}). With gamma_k the eigenvalues of A^T A the
diagnostic matrix has eigenvalues lambda_k = gamma_k^2 / (1 + gamma_k), and the
optimal rank-r approximation keeps the r leading eigen-directions of A^T A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import make_rng
from .diagnostic import DiagnosticMatrix, FeatureSubspace, GradientBatch
from .measures import TargetModel


def gamma_from_lambda(lam):
    """Invert lambda = gamma^2/(1+gamma) on gamma >= 0."""
    lam = np.asarray(lam, dtype=float)
    return 0.5 * (lam + np.sqrt(lam) * np.sqrt(lam + 4.0))


def algebraic_spectrum(d: int, s: float = 2.0, trace: float = 1.0) -> np.ndarray:
    """lambda_k proportional to k^-s, k = 1..d, scaled to sum to ``trace``."""
    lam = np.arange(1, d + 1, dtype=float) ** (-s)
    return trace * lam / lam.sum()


def exponential_spectrum(d: int, rho: float = 0.7, trace: float = 1.0) -> np.ndarray:
    """lambda_k proportional to rho^k, k = 1..d, scaled to sum to ``trace``."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    lam = rho ** np.arange(1, d + 1, dtype=float)
    return trace * lam / lam.sum()


@dataclass(frozen=True)
class LinGaussProblem:
    a: np.ndarray
    gamma: np.ndarray
    u: np.ndarray
    lam: np.ndarray

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def posterior_covariance(self) -> np.ndarray:
        return (self.u / (1.0 + self.gamma)) @ self.u.T

    def subspace(self, r: int) -> FeatureSubspace:
        return FeatureSubspace(self.u[:, :r], self.u[:, r:])

    def target(self) -> TargetModel:
        ata = self.a.T @ self.a
        return TargetModel(
            self.dim,
            lambda x: -0.5 * np.sum((x @ self.a.T) ** 2, axis=1),
            lambda x: -x @ ata,
        )

    def _check_r(self, r: int) -> None:
        if not 0 <= r <= self.dim:
            raise ValueError(f"r={r} outside [0, {self.dim}]")


def from_matrix(a) -> LinGaussProblem:
    """Oracle for an arbitrary forward matrix A (eigenpairs of A^T A computed numerically)."""
    from .linalg import sorted_eigh

    a = np.atleast_2d(np.asarray(a, dtype=float))
    gamma, u = sorted_eigh(a.T @ a)
    gamma = np.clip(gamma, 0.0, None)
    return LinGaussProblem(a, gamma, u, gamma**2 / (1.0 + gamma))


def from_spectrum(lambdas, basis: Optional[np.ndarray] = None, seed: int = 0) -> LinGaussProblem:
    """Build A = diag(sqrt(gamma)) U^T whose diagnostic matrix has the given spectrum.

    ``basis`` fixes U; otherwise a random orthonormal basis is drawn from ``seed``.
    """
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be nonnegative")
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be in descending order")
    d = lam.size
    if basis is None:
        q, rr = np.linalg.qr(make_rng(seed, "basis").standard_normal((d, d)))
        u = q * np.sign(np.diag(rr))
    else:
        u = np.asarray(basis, dtype=float)
        if u.shape != (d, d) or not np.allclose(u.T @ u, np.eye(d), atol=1e-10):
            raise ValueError("basis must be a (d, d) orthonormal matrix")
    gamma = gamma_from_lambda(lam)
    a = np.sqrt(gamma)[:, None] * u.T
    return LinGaussProblem(a, gamma, u, gamma**2 / (1.0 + gamma))


def exact_h(p: LinGaussProblem) -> DiagnosticMatrix:
    """A^T A (I + A^T A)^{-1} A^T A, assembled from the eigenpairs."""
    return DiagnosticMatrix((p.u * p.lam) @ p.u.T)


def exact_kl(p: LinGaussProblem, r: int) -> float:
    p._check_r(r)
    g = p.gamma[r:]
    return 0.5 * float(np.sum(np.log1p(g) - g / (1.0 + g)))


def exact_hellinger2(p: LinGaussProblem, r: int) -> float:
    """Squared Hellinger distance 1 - BC between the posterior and its rank-r optimum."""
    p._check_r(r)
    g = p.gamma[r:]
    log_bc = 0.25 * float(np.sum(np.log1p(g) - 2.0 * np.log1p(0.5 * g)))
    return 0.0 - math.expm1(log_bc)


def optimal_covariance(p: LinGaussProblem, r: int) -> np.ndarray:
    """Covariance of the optimal rank-r approximation; the same for every alpha != 0."""
    p._check_r(r)
    scale = np.ones(p.dim)
    scale[:r] = 1.0 / (1.0 + p.gamma[:r])
    return (p.u * scale) @ p.u.T


def importance_batch(p: LinGaussProblem, n: int, seed: int = 0) -> GradientBatch:
    """Gradient batch of n prior draws weighted by the likelihood (for estimate_h)."""
    x = make_rng(seed, "oracle_batch").standard_normal((n, p.dim))
    t = p.target()
    return GradientBatch(x, t.grad_batch(x), t.log_l_batch(x))
