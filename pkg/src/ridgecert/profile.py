"""Optimal ridge profiles, reduced normalizing constants and the identities they satisfy.

For a feature subspace U_r the optimal profile is the conditional power mean
l_opt(theta) = E[l^alpha | U_r^T x = theta]^(1/alpha) (geometric mean at
alpha = 0). Everything here is estimated by nested Monte Carlo: outer draws
theta ~ mu_r, inner draws from the conditional mu_{perp|r}(. | theta).

Standard errors come from outer replication only. The (1/alpha)-power of an
inner average is a biased plug-in; the bias is O(1/n_inner) and not reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._util import EstimatorFailure, check_log_values, delta_se_fn, logmeanexp
from .diagnostic import FeatureSubspace
from .divergence import DivergenceEstimate, _branch, d_alpha_mc
from .measures import ReferenceMeasure, TargetModel, conditional_sampler, sample


@dataclass(frozen=True)
class ProfileSpec:
    alpha: float
    subspace: FeatureSubspace
    n_inner: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if int(self.n_inner) < 1:
            raise ValueError("n_inner must be >= 1")

    @property
    def rank(self) -> int:
        return self.subspace.rank


def split_budget(n_total: int) -> tuple[int, int]:
    """Default nested split n_outer = n_inner = floor(sqrt(n_total))."""
    k = max(1, math.isqrt(int(n_total)))
    return k, k


def _conditional_power_mean(alpha: float, log_l: np.ndarray) -> np.ndarray:
    # rows of log_l hold the inner draws for one theta each
    if _branch(alpha) == "zero":
        with np.errstate(invalid="ignore"):
            return np.mean(log_l, axis=1)
    return logmeanexp(alpha * log_l, axis=1) / alpha


def eval_profile(target: TargetModel, mu: ReferenceMeasure, spec: ProfileSpec, theta_r) -> np.ndarray:
    """log l_opt(theta_r) for one point (shape (r,)) or a stack of points (shape (k, r)).

    Each theta gets its own inner stream seeded by (spec.seed, theta), so repeated
    evaluation at the same point is deterministic and independent of batching.
    """
    r = spec.rank
    theta = np.asarray(theta_r, dtype=float)
    single = theta.ndim <= 1
    theta = theta.reshape(-1, r) if r else np.zeros((1 if single else theta.shape[0], 0))
    draw = conditional_sampler(mu, spec.subspace)
    out = np.empty(theta.shape[0])
    for i, th in enumerate(theta):
        x = draw(th, spec.n_inner, (spec.seed, "profile", th))
        logs = check_log_values(target.log_l_batch(x), "target")
        if not np.any(np.isfinite(logs)):
            raise EstimatorFailure(f"every conditional draw at theta={th} has zero likelihood", logs.size)
        out[i] = _conditional_power_mean(spec.alpha, logs[None, :])[0]
    return float(out[0]) if single else out


@dataclass(frozen=True)
class _Pool:
    """Nested sample pool: ``log_l[i, j]`` at the j-th conditional draw given ``theta[i]``."""

    theta: np.ndarray
    log_l: np.ndarray

    @property
    def shift(self) -> float:
        return float(np.max(self.log_l))

    def inner_means(self, power: float = 1.0) -> np.ndarray:
        # mean_j (l_ij / e^shift)^power
        return np.mean(np.exp(power * (self.log_l - self.shift)), axis=1)


def _nested_pool(target: TargetModel, mu: ReferenceMeasure, spec: ProfileSpec, n_outer: int, tag="pool") -> _Pool:
    if n_outer < 2:
        raise ValueError("n_outer must be >= 2 for a standard error")
    u_r = spec.subspace.u_r
    theta = sample(mu, n_outer, (spec.seed, tag, "outer")) @ u_r
    draw = conditional_sampler(mu, spec.subspace)
    x = np.concatenate([draw(th, spec.n_inner, (spec.seed, tag, i)) for i, th in enumerate(theta)])
    log_l = check_log_values(target.log_l_batch(x), "target").reshape(n_outer, spec.n_inner)
    if not np.any(np.isfinite(log_l)):
        raise EstimatorFailure("every pooled draw has zero likelihood", log_l.size)
    return _Pool(theta, log_l)


def _check_certifiable(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _pool_kl_terms(pool: _Pool):
    """Per-outer terms for KL(pi || pi_opt_1): a_i and mean_j A_ij (log A_ij - log a_i)."""
    s = pool.log_l - pool.shift
    big_a = np.exp(s)
    a = big_a.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = np.log(a)
        inner = np.where(big_a > 0, big_a * (s - log_a[:, None]), 0.0)
    return a, inner.mean(axis=1), log_a


def _z_ratio_from_pool(alpha: float, pool: _Pool) -> tuple[float, float]:
    a = pool.inner_means(1.0)
    c = pool.inner_means(alpha) ** (1.0 / alpha)
    f = lambda m: m[1] / m[0]
    cols = np.column_stack([a, c])
    return float(f(cols.mean(axis=0))), delta_se_fn(cols, f)


def z_ratio(target: TargetModel, mu: ReferenceMeasure, spec: ProfileSpec, n_outer: int) -> tuple[float, float]:
    """(Z_{alpha,r} / Z_pi, standard error) from one nested pool."""
    _check_certifiable(spec.alpha)
    return _z_ratio_from_pool(spec.alpha, _nested_pool(target, mu, spec, n_outer))


def _d_opt_from_pool(alpha: float, pool: _Pool) -> tuple[float, float]:
    if _branch(alpha) == "one":
        a, u, _ = _pool_kl_terms(pool)
        f = lambda m: m[1] / m[0]
        cols = np.column_stack([a, u])
        return float(f(cols.mean(axis=0))), delta_se_fn(cols, f)
    a = pool.inner_means(1.0)
    c = pool.inner_means(alpha) ** (1.0 / alpha)
    f = lambda m: ((m[1] / m[0]) ** alpha - 1.0) / (alpha * (alpha - 1.0))
    cols = np.column_stack([a, c])
    return float(f(cols.mean(axis=0))), delta_se_fn(cols, f)


def d_alpha_opt(target: TargetModel, mu: ReferenceMeasure, spec: ProfileSpec, n_outer: int) -> DivergenceEstimate:
    """D_alpha(pi || pi_opt) from the reduced normalizing constant.

    Uses ((Z_{alpha,r}/Z_pi)^alpha - 1)/(alpha(alpha-1)) for alpha < 1 and the
    pooled KL estimate against the conditional-mean profile at alpha = 1.
    """
    _check_certifiable(spec.alpha)
    pool = _nested_pool(target, mu, spec, n_outer)
    value, se = _d_opt_from_pool(spec.alpha, pool)
    return DivergenceEstimate(spec.alpha, value, se, pool.log_l.size)


@dataclass(frozen=True)
class ReducedMeasure:
    spec: ProfileSpec
    log_profile: Callable[[np.ndarray], np.ndarray]
    z_ratio: Optional[float] = None
    z_ratio_se: float = 0.0


def reduce_measure(
    target: TargetModel, mu: ReferenceMeasure, spec: ProfileSpec, n_outer: Optional[int] = None
) -> ReducedMeasure:
    """Lazy optimal profile plus an estimate of Z_{alpha,r}/Z_pi (None when alpha is outside (0, 1])."""
    profile = lambda theta: eval_profile(target, mu, spec, theta)
    if not 0 < spec.alpha <= 1:
        return ReducedMeasure(spec, profile)
    z, se = z_ratio(target, mu, spec, n_outer or spec.n_inner)
    return ReducedMeasure(spec, profile, z, se)


@dataclass(frozen=True)
class PythagoreanCheck:
    """Both sides of D(pi||pi~) = D(pi||pi_opt) + (Z_{a,r}/Z_pi)^a D(pi_opt||pi~)."""

    alpha: float
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    d_opt: float
    d_opt_other: float
    z_ratio: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def std_error(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)


def pythagorean_residual(
    target: TargetModel,
    mu: ReferenceMeasure,
    spec: ProfileSpec,
    other_profile_log: Callable[[np.ndarray], np.ndarray],
    n: int,
) -> PythagoreanCheck:
    """Check the Pythagorean identity for a ridge pi~ with profile ``other_profile_log``.

    ``other_profile_log`` maps a (k, r) array of feature values to log profile
    values. The left side is estimated on its own batch of n reference draws;
    the three right-hand terms share one nested pool of about n draws. On a
    single shared pool the identity would hold by algebra alone, so the split
    makes the check sensitive to errors in the conditional sampler.
    """
    alpha = spec.alpha
    _check_certifiable(alpha)
    u_r = spec.subspace.u_r
    other = lambda th: np.asarray(other_profile_log(th), dtype=float).reshape(th.shape[0])
    lhs = d_alpha_mc(alpha, target, lambda x: other(x @ u_r), mu, n, seed=(spec.seed, "lhs"))

    pool = _nested_pool(target, mu, spec, max(2, n // spec.n_inner))
    p = check_log_values(other(pool.theta), "other profile")
    t = np.exp(p - np.max(p))
    a = pool.inner_means(1.0)

    if _branch(alpha) == "one":
        _, u, log_a = _pool_kl_terms(pool)
        with np.errstate(invalid="ignore"):
            v = np.where(a > 0, a * (log_a - (p - np.max(p))), 0.0)

        def parts(m):
            ma, mu_, mv, mt = m
            d1 = mu_ / ma
            d2 = mv / ma - math.log(ma) + math.log(mt)
            return d1, d2, 1.0

        cols = np.column_stack([a, u, v, t])
    else:
        b = pool.inner_means(alpha)
        c = b ** (1.0 / alpha)
        bt = b * t ** (1.0 - alpha)
        k = 1.0 / (alpha * (alpha - 1.0))

        def parts(m):
            ma, mc, mt, mbt = m
            zr = mc / ma
            d1 = k * (zr**alpha - 1.0)
            d2 = k * (mbt * mt ** (alpha - 1.0) / mc**alpha - 1.0)
            return d1, d2, zr

        cols = np.column_stack([a, c, t, bt])

    def rhs_of(m):
        d1, d2, zr = parts(m)
        return d1 + zr**alpha * d2

    d1, d2, zr = parts(cols.mean(axis=0))
    return PythagoreanCheck(
        alpha=alpha,
        lhs=lhs.value,
        lhs_se=lhs.std_error,
        rhs=float(d1 + zr**alpha * d2),
        rhs_se=delta_se_fn(cols, rhs_of),
        d_opt=float(d1),
        d_opt_other=float(d2),
        z_ratio=float(zr),
    )


@dataclass(frozen=True)
class QuasiOptimality:
    """lower = D(pi||pi_opt_alpha), value = D(pi||pi_opt_1), upper = lower / alpha."""

    alpha: float
    lower: float
    value: float
    upper: float
    lower_se: float
    value_se: float
    upper_se: float
    gap_lower_se: float  # SE of value - lower
    gap_upper_se: float  # SE of upper - value

    def holds(self, n_se: float = 3.0) -> bool:
        return (
            self.value - self.lower >= -n_se * self.gap_lower_se
            and self.upper - self.value >= -n_se * self.gap_upper_se
        )


def quasi_optimality_gap(
    target: TargetModel,
    mu: ReferenceMeasure,
    subspace: FeatureSubspace,
    alpha: float,
    n: int,
    n_inner: Optional[int] = None,
    seed: int = 0,
) -> QuasiOptimality:
    """Compare the alpha-optimal profile with the KL-optimal one under D_alpha.

    Both profiles are built from the same nested pool of about n draws
    (n_outer = n_inner = sqrt(n) unless ``n_inner`` is given).
    """
    _check_certifiable(alpha)
    n_outer, default_inner = split_budget(n)
    n_inner = n_inner or default_inner
    n_outer = max(2, n // n_inner)
    pool = _nested_pool(target, mu, ProfileSpec(alpha, subspace, n_inner, seed), n_outer)

    if _branch(alpha) == "one":
        v, se = _d_opt_from_pool(1.0, pool)
        return QuasiOptimality(alpha, v, v, v, se, se, se, 0.0, 0.0)

    a = pool.inner_means(1.0)
    b = pool.inner_means(alpha)
    c = b ** (1.0 / alpha)
    ba = b * a ** (1.0 - alpha)
    k = 1.0 / (alpha * (alpha - 1.0))
    lower = lambda m: k * ((m[1] / m[0]) ** alpha - 1.0)
    value = lambda m: k * (m[2] / m[0] - 1.0)
    upper = lambda m: lower(m) / alpha
    cols = np.column_stack([a, c, ba])
    m = cols.mean(axis=0)
    return QuasiOptimality(
        alpha,
        float(lower(m)),
        float(value(m)),
        float(upper(m)),
        delta_se_fn(cols, lower),
        delta_se_fn(cols, value),
        delta_se_fn(cols, upper),
        delta_se_fn(cols, lambda q: value(q) - lower(q)),
        delta_se_fn(cols, lambda q: upper(q) - value(q)),
    )
