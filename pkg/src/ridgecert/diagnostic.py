"""Diagnostic matrices built from log-likelihood gradients, their spectra and feature subspaces."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import check_spd, orth_complement, sorted_eigh, sym_sqrt


class DegenerateWeights(ValueError):
    """Every importance weight is zero (all log weights are -inf)."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GradientBatch:
    """Gradient samples ``grads[i] = grad log l(points[i])`` with log importance weights.

    Use zero log weights when the points are already distributed according to
    the target; use ``log l(points)`` when they were drawn from the reference.
    """

    points: np.ndarray
    grads: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        grads = np.atleast_2d(np.asarray(self.grads, dtype=float))
        logw = np.asarray(self.log_weights, dtype=float).reshape(-1)
        if points.shape != grads.shape:
            raise ValueError(f"points {points.shape} and grads {grads.shape} differ in shape")
        if points.shape[0] < 1 or logw.shape[0] != points.shape[0]:
            raise ValueError("batch must be nonempty with one log weight per sample")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(grads))):
            raise ValueError("points and grads must be finite")
        if np.any(np.isnan(logw)) or np.any(logw == np.inf):
            raise ValueError("log weights must be finite or -inf")
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "grads", _frozen(grads))
        object.__setattr__(self, "log_weights", _frozen(logw))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def normalized_weights(self) -> np.ndarray:
        logw = self.log_weights
        if not np.any(np.isfinite(logw)):
            raise DegenerateWeights("all importance weights are zero")
        w = np.exp(logw - np.max(logw))
        return w / w.sum()


@dataclass(frozen=True)
class DiagnosticMatrix:
    h: np.ndarray
    n_eff: float = float("inf")

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("diagnostic matrix must be square")
        h = 0.5 * (h + h.T)
        object.__setattr__(self, "h", _frozen(h))

    @property
    def dim(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _frozen(self.eigenvectors))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class FeatureSubspace:
    u_r: np.ndarray
    u_perp: np.ndarray

    def __post_init__(self):
        u_r = np.asarray(self.u_r, dtype=float)
        u_perp = np.asarray(self.u_perp, dtype=float)
        if u_r.ndim == 1:
            u_r = u_r[:, None]
        d = u_r.shape[0]
        u_perp = u_perp.reshape(d, -1)
        full = np.hstack([u_r, u_perp])
        if full.shape != (d, d) or not np.allclose(full.T @ full, np.eye(d), atol=1e-10, rtol=0):
            raise ValueError("[u_r u_perp] must be a unitary matrix")
        object.__setattr__(self, "u_r", _frozen(u_r))
        object.__setattr__(self, "u_perp", _frozen(u_perp))

    @classmethod
    def from_basis(cls, u_r) -> "FeatureSubspace":
        """Complete an orthonormal (d, r) basis with any orthonormal complement."""
        u_r = np.asarray(u_r, dtype=float)
        if u_r.ndim == 1:
            u_r = u_r[:, None]
        return cls(u_r, orth_complement(u_r))

    @property
    def dim(self) -> int:
        return self.u_r.shape[0]

    @property
    def rank(self) -> int:
        return self.u_r.shape[1]


def estimate_h(batch: GradientBatch) -> DiagnosticMatrix:
    """Self-normalized importance-sampling estimate of E_pi[g g^T]."""
    w = batch.normalized_weights()
    g = batch.grads
    h = (g * w[:, None]).T @ g
    n_eff = 1.0 / float(np.sum(w * w))
    return DiagnosticMatrix(np.triu(h) + np.triu(h, 1).T, n_eff)


def estimate_h_phi(batch: GradientBatch, jacobian_inv_t: Callable[[np.ndarray], np.ndarray]) -> DiagnosticMatrix:
    """Diagnostic matrix after a change of variables z = Phi(x).

    ``jacobian_inv_t(x)`` must return the (d, d) matrix grad Phi(x)^{-T}.
    Each gradient is mapped to ``J(x_i) g_i`` before the weighted second moment.
    """
    mapped = np.empty_like(batch.grads)
    for i, (x, g) in enumerate(zip(batch.points, batch.grads)):
        j = np.asarray(jacobian_inv_t(x), dtype=float)
        if not np.all(np.isfinite(j)):
            raise ValueError(f"jacobian callback returned non-finite values at sample {i}")
        mapped[i] = j @ g
    return estimate_h(GradientBatch(batch.points, mapped, batch.log_weights))


def eigh(h: DiagnosticMatrix) -> Spectrum:
    w, v = sorted_eigh(h.h)
    return Spectrum(w, v)


def select_features(spec: Spectrum, r: int) -> FeatureSubspace:
    """Leading ``r`` eigenvectors and the remaining ones as the complement."""
    d = spec.dim
    if not 0 <= r <= d:
        raise ValueError(f"r={r} outside [0, {d}]")
    v = spec.eigenvectors
    return FeatureSubspace(v[:, :r], v[:, r:])


def tail_sum(spec: Spectrum, r: int) -> float:
    d = spec.dim
    if not 0 <= r <= d:
        raise ValueError(f"r={r} outside [0, {d}]")
    return max(float(np.sum(spec.eigenvalues[r:])), 0.0)


def effective_rank(h: DiagnosticMatrix) -> float:
    """trace(H) / ||H||_2, a continuous surrogate for rank(H)."""
    lam = eigh(h).eigenvalues
    top = float(np.max(np.abs(lam))) if lam.size else 0.0
    if top == 0.0:
        raise ValueError("effective rank of the zero matrix is undefined")
    return float(np.trace(h.h)) / top


def generalized_eig(h: DiagnosticMatrix, sigma: np.ndarray) -> Spectrum:
    """Solve H v = lam Sigma^{-1} v.

    Computed from the symmetric problem for Sigma^{1/2} H Sigma^{1/2}; the
    returned vectors v = Sigma^{1/2} w satisfy v^T Sigma^{-1} v = 1.
    """
    sigma = check_spd(sigma, "Sigma")
    if sigma.shape != h.h.shape:
        raise ValueError("H and Sigma must have the same shape")
    root = sym_sqrt(sigma)
    w, v = sorted_eigh(root @ h.h @ root)
    return Spectrum(w, root @ v)
