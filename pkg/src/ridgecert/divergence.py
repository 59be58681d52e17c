"""Amari alpha-divergences: generator functions, phi-entropies and estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._util import check_log_values, delta_se
from .linalg import check_spd
from .measures import ReferenceMeasure, TargetModel, sample

_SNAP = 1e-8


@dataclass(frozen=True)
class DivergenceEstimate:
    alpha: float
    value: float
    std_error: float = 0.0
    n_samples: int = 0
    saturated: bool = False


def _branch(alpha: float) -> str:
    if abs(alpha) < _SNAP:
        return "zero"
    if abs(alpha - 1.0) < _SNAP:
        return "one"
    return "power"


def phi_alpha(alpha: float, t):
    """Convex generator of the alpha-divergence, evaluated elementwise.

    phi(t) = (t^a - 1)/(a(a-1)) - (t-1)/(a-1); the a=0 and a=1 limits are
    -ln t + t - 1 and t ln t - t + 1. phi(0) is +inf when a <= 0.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("phi_alpha is defined for t >= 0 only")
    branch = _branch(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        if branch == "zero":
            out = np.where(t > 0, -np.log(np.where(t > 0, t, 1.0)) + t - 1.0, np.inf)
        elif branch == "one":
            out = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)) - t + 1.0, 1.0)
        else:
            if alpha < 0:
                tp = np.where(t > 0, np.power(np.where(t > 0, t, 1.0), alpha), np.inf)
            else:
                tp = np.power(t, alpha)
            out = (tp - 1.0) / (alpha * (alpha - 1.0)) - (t - 1.0) / (alpha - 1.0)
    return out[()] if out.ndim == 0 else out


def phi_entropy(alpha: float, f_values, weights) -> float:
    """sum w_i phi(f_i) - phi(sum w_i f_i): the phi-entropy of f under a discrete measure."""
    f = np.asarray(f_values, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if f.shape != w.shape:
        raise ValueError(f"f_values has {f.size} entries but weights has {w.size}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be a probability vector")
    if np.any(f < 0):
        raise ValueError("f_values must be nonnegative")
    return float(np.sum(w * phi_alpha(alpha, f)) - phi_alpha(alpha, float(np.sum(w * f))))


def _logdet(s: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(np.linalg.cholesky(s)))))


def gaussian_d_alpha(alpha: float, cov_a, cov_b) -> float:
    """D_alpha(N(0, cov_a) || N(0, cov_b)) in closed form, alpha in (0, 1].

    Uses int p_a^alpha p_b^(1-alpha) = |S_a|^(-alpha/2) |S_b|^(-(1-alpha)/2)
    |alpha S_a^{-1} + (1-alpha) S_b^{-1}|^(-1/2), and the usual KL formula at alpha = 1.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    sa = check_spd(np.atleast_2d(np.asarray(cov_a, dtype=float)), "cov_a")
    sb = check_spd(np.atleast_2d(np.asarray(cov_b, dtype=float)), "cov_b")
    if sa.shape != sb.shape:
        raise ValueError("covariances must have the same shape")
    d = sa.shape[0]
    if _branch(alpha) == "one":
        sb_inv_sa = np.linalg.solve(sb, sa)
        return 0.5 * (float(np.trace(sb_inv_sa)) - d - _logdet(sa) + _logdet(sb))
    mix = alpha * np.linalg.inv(sa) + (1.0 - alpha) * np.linalg.inv(sb)
    mix = 0.5 * (mix + mix.T)
    log_int = -0.5 * alpha * _logdet(sa) - 0.5 * (1.0 - alpha) * _logdet(sb) - 0.5 * _logdet(mix)
    return math.expm1(log_int) / (alpha * (alpha - 1.0))


def d_alpha_from_logs(alpha: float, log_l: np.ndarray, log_p: np.ndarray) -> DivergenceEstimate:
    """D_alpha(pi || pi~) from log l and log l~ evaluated on one batch of reference draws.

    pi and pi~ are proportional to l mu and l~ mu. Both normalizing constants
    are estimated on the same batch, so only the ratios of l and l~ matter.
    """
    log_l = check_log_values(log_l, "target")
    log_p = check_log_values(log_p, "profile")
    n = log_l.size
    if not np.any(np.isfinite(log_l)) or not np.any(np.isfinite(log_p)):
        raise ValueError("every sample has zero density under one of the measures")
    a = np.exp(log_l - np.max(log_l))
    t = np.exp(log_p - np.max(log_p))
    ma, mt = a.mean(), t.mean()

    if _branch(alpha) == "one":
        diff = np.where(a > 0, log_l - log_p, 0.0)
        if np.any(np.isinf(diff) & (a > 0)):
            return DivergenceEstimate(alpha, math.inf, math.inf, n)
        u = a * diff
        mu_ = u.mean()
        value = mu_ / ma - math.log(ma) - np.max(log_l) + math.log(mt) + np.max(log_p)
        grad = np.array([1.0 / ma, -mu_ / ma**2 - 1.0 / ma, 1.0 / mt])
        se = delta_se(np.column_stack([u, a, t]), grad)
        return DivergenceEstimate(alpha, float(value), se, n)

    u = np.exp(alpha * (log_l - np.max(log_l)) + (1.0 - alpha) * (log_p - np.max(log_p)))
    mu_ = u.mean()
    ratio = mu_ * mt ** (alpha - 1.0) / ma**alpha
    coef = 1.0 / (alpha * (alpha - 1.0))
    value = coef * (ratio - 1.0)
    grad = coef * ratio * np.array([1.0 / mu_, (alpha - 1.0) / mt, -alpha / ma])
    se = delta_se(np.column_stack([u, t, a]), grad)
    return DivergenceEstimate(alpha, float(value), se, n)


def d_alpha_mc(
    alpha: float,
    target: TargetModel,
    profile_log: Callable[[np.ndarray], np.ndarray],
    mu: ReferenceMeasure,
    n: int,
    seed: int,
) -> DivergenceEstimate:
    """Monte Carlo estimate of D_alpha(pi || pi~) by self-normalized importance sampling from mu.

    ``profile_log`` maps (n, d) points to log l~; pass ``lambda x: 0 * x[:, 0]``
    for pi~ = mu.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    x = sample(mu, n, seed)
    log_l = target.log_l_batch(x)
    log_p = np.asarray(profile_log(x), dtype=float).reshape(n)
    return d_alpha_from_logs(alpha, log_l, log_p)
