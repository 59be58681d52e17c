"""Reference measures, target density ratios and subspace Sobolev constants."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._util import UnsupportedOperation, make_rng
from .diagnostic import FeatureSubspace
from .linalg import check_spd, jacobi_eigh, orth_complement, sym_sqrt


@dataclass(frozen=True)
class TargetModel:
    """Unnormalized density ratio l = dpi/dmu (up to a constant), in log form.

    Both callables act row-wise: ``log_l`` maps an (n, d) array to (n,) and
    ``grad_log_l`` maps (n, d) to (n, d).
    """

    dim: int
    log_l: Callable[[np.ndarray], np.ndarray]
    grad_log_l: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dimension must be positive")

    def log_l_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.asarray(self.log_l(x), dtype=float).reshape(x.shape[0])

    def grad_batch(self, x: np.ndarray) -> np.ndarray:
        if self.grad_log_l is None:
            raise UnsupportedOperation("target model has no gradient")
        x = np.atleast_2d(x)
        return np.asarray(self.grad_log_l(x), dtype=float).reshape(x.shape)


def gradient_fd_error(target: TargetModel, x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """|central difference of log_l along v - <grad log_l, v>| for each row of x."""
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    fd = (target.log_l_batch(x + h * v) - target.log_l_batch(x - h * v)) / (2 * h)
    return np.abs(fd - np.sum(target.grad_batch(x) * v, axis=1))


class SobolevSource(enum.Enum):
    ANALYTIC = "analytic"
    BAKRY_EMERY_HOLLEY_STROOCK = "bakry_emery_holley_stroock"
    USER_SUPPLIED = "user_supplied"


@dataclass(frozen=True)
class SobolevBudget:
    """Subspace log-Sobolev (beta=1) and Poincare (beta=2) constants of a reference measure."""

    c1_sub: float
    c2_sub: float
    source: SobolevSource = SobolevSource.USER_SUPPLIED
    curvature: Optional[float] = None
    oscillation: Optional[float] = None

    def __post_init__(self):
        if not (self.c1_sub >= 0 and self.c2_sub >= 0):
            raise ValueError("Sobolev constants must be nonnegative")

    @classmethod
    def analytic(cls, c: float = 1.0) -> "SobolevBudget":
        return cls(c, c, SobolevSource.ANALYTIC)

    @classmethod
    def bakry_emery_holley_stroock(cls, curvature: float, oscillation: float) -> "SobolevBudget":
        """Constants for densities exp(-V - B) with Hess V >= curvature*I and osc(B) = oscillation."""
        if curvature <= 0:
            raise ValueError("curvature R must be positive")
        if oscillation < 0:
            raise ValueError("oscillation of B must be nonnegative")
        c = math.exp(oscillation) / curvature
        return cls(c, c, SobolevSource.BAKRY_EMERY_HOLLEY_STROOCK, curvature, oscillation)


def c_beta_sub(budget: SobolevBudget, beta: float) -> float:
    """Subspace beta-Sobolev constant; beta > 2 uses C_beta <= (beta/2) C_2."""
    if not beta >= 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    if beta <= 2:
        return max(budget.c1_sub, budget.c2_sub)
    return 0.5 * beta * budget.c2_sub


class ReferenceKind(enum.Enum):
    STANDARD_GAUSSIAN = "standard_gaussian"
    GAUSSIAN = "gaussian"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ReferenceMeasure:
    dim: int
    kind: ReferenceKind
    sobolev: SobolevBudget
    covariance: Optional[np.ndarray] = None
    sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _root: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def standard_gaussian(cls, dim: int) -> "ReferenceMeasure":
        return cls(dim, ReferenceKind.STANDARD_GAUSSIAN, SobolevBudget.analytic(1.0))

    @classmethod
    def gaussian(cls, covariance) -> "ReferenceMeasure":
        """N(0, covariance); subspace constants bounded by the largest covariance eigenvalue."""
        cov = check_spd(np.array(covariance, dtype=float, copy=True), "covariance")
        cov.setflags(write=False)
        lam_max = float(np.max(jacobi_eigh(cov)[0]))
        root = sym_sqrt(cov)
        root.setflags(write=False)
        return cls(cov.shape[0], ReferenceKind.GAUSSIAN, SobolevBudget.analytic(lam_max), cov, _root=root)

    @classmethod
    def custom(cls, dim, sobolev: SobolevBudget, sampler=None, log_density=None) -> "ReferenceMeasure":
        return cls(dim, ReferenceKind.CUSTOM, sobolev, sampler=sampler, log_density=log_density)


def _seed_parts(seed) -> tuple:
    return seed if isinstance(seed, tuple) else (seed,)


def sample(mu: ReferenceMeasure, n: int, seed) -> np.ndarray:
    """n i.i.d. draws from mu as an (n, d) array; identical for identical seeds.

    ``seed`` is an int or a tuple of seed components (ints, strings, arrays).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(*_seed_parts(seed), "sample")
    if mu.kind is ReferenceKind.CUSTOM:
        if mu.sampler is None:
            raise UnsupportedOperation("custom reference measure has no sampler")
        return np.asarray(mu.sampler(n, rng), dtype=float).reshape(n, mu.dim)
    z = rng.standard_normal((n, mu.dim))
    if mu.kind is ReferenceKind.GAUSSIAN:
        return z @ mu._root
    return z


def conditional_sampler(mu: ReferenceMeasure, subspace: FeatureSubspace):
    """Precompute conditioning on U_r^T x = theta; returns ``draw(theta, n, seed)``.

    Non-isotropic Gaussians are handled in whitened coordinates z = Sigma^{-1/2} x:
    with Sigma^{1/2} U_r = Q R the constraint becomes Q^T z = R^{-T} theta.
    """
    u_r = subspace.u_r
    d, r = u_r.shape
    if mu.kind is ReferenceKind.STANDARD_GAUSSIAN:
        root, q, q_perp, rr = None, u_r, subspace.u_perp, None
    elif mu.kind is ReferenceKind.GAUSSIAN:
        root = mu._root
        q, rr = np.linalg.qr(root @ u_r)
        q_perp = orth_complement(q)
    else:
        raise UnsupportedOperation("conditional sampling needs a Gaussian reference measure")

    def draw(theta_r, n: int, seed) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        theta = np.asarray(theta_r, dtype=float).reshape(r)
        c = theta if rr is None else (np.linalg.solve(rr.T, theta) if r else theta)
        rng = make_rng(*_seed_parts(seed), "conditional")
        z = (q @ c)[None, :] + rng.standard_normal((n, d - r)) @ q_perp.T
        return z if root is None else z @ root

    return draw


def sample_conditional(mu: ReferenceMeasure, subspace: FeatureSubspace, theta_r, n: int, seed) -> np.ndarray:
    """n draws from mu conditioned on U_r^T x = theta_r."""
    return conditional_sampler(mu, subspace)(theta_r, n, seed)
