"""Majorized loss functions and certificates built from eigenvalue tails.

All J functions map a scaled tail t = C_sub * sum_{k>r} lambda_k to an
upper bound on D_alpha(pi || pi_opt). For alpha < 1 they saturate at the
vacuous value 1/(alpha(1-alpha)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .diagnostic import Spectrum, tail_sum
from .divergence import phi_entropy
from .measures import SobolevBudget, c_beta_sub

_SNAP = 1e-8
_TWO_THIRDS = 2.0 / 3.0


class BoundFamily(enum.Enum):
    BASIC = "basic"
    IMPROVED = "improved"
    DATA_FREE = "datafree"
    PINSKER_TV = "pinsker_tv"


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _is_kl(alpha: float) -> bool:
    return abs(alpha - 1.0) < _SNAP


def plateau(alpha: float) -> float:
    """The vacuous ceiling 1/(alpha(1-alpha)) of D_alpha; infinite at alpha = 1."""
    _check_alpha(alpha)
    return math.inf if _is_kl(alpha) else 1.0 / (alpha * (1.0 - alpha))


def _clamped_power_loss(alpha: float, slope: float, power: float, t):
    # (1/(a(a-1))) * ((1 - slope*t)_+^power - 1), via log1p/expm1 so tiny t keeps full precision
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    base = slope * t
    inside = base < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        powm1 = np.where(inside, np.expm1(power * np.log1p(-np.where(inside, base, 0.0))), -1.0)
    out = powm1 / (alpha * (alpha - 1.0))
    return out[()] if out.ndim == 0 else out


def _basic_params(alpha):
    if alpha > 0.5:
        return (1.0 - alpha) / 2.0, alpha
    return (1.0 - alpha) / (4.0 * alpha), alpha


def _improved_params(alpha):
    power = alpha / (2.0 * (1.0 - alpha))
    if alpha > 0.5:
        return (1.0 - alpha) ** 2, power
    return (1.0 - alpha) ** 2 / (2.0 * alpha), power


def _half_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = 0.5 * t
    return out[()] if out.ndim == 0 else out


def j_basic(alpha: float, t):
    """Majorized loss from the subspace 1/alpha-Sobolev inequality (Beckner extension below 1/2)."""
    _check_alpha(alpha)
    if _is_kl(alpha):
        return _half_t(t)
    return _clamped_power_loss(alpha, *_basic_params(alpha), t)


def j_improved(alpha: float, t):
    """Majorized loss from the improved beta-Sobolev inequality; t/2 at alpha = 1 by continuity."""
    _check_alpha(alpha)
    if _is_kl(alpha):
        return _half_t(t)
    return _clamped_power_loss(alpha, *_improved_params(alpha), t)


def j_datafree(alpha: float, t):
    """Concave majorant for data-averaged certificates.

    j_improved for alpha >= 2/3, otherwise t/(2 alpha) capped at the vacuous ceiling.
    """
    _check_alpha(alpha)
    if alpha >= _TWO_THIRDS - 1e-12:
        return j_improved(alpha, t)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = np.minimum(t / (2.0 * alpha), plateau(alpha))
    return out[()] if out.ndim == 0 else out


_J = {
    BoundFamily.BASIC: j_basic,
    BoundFamily.IMPROVED: j_improved,
    BoundFamily.DATA_FREE: j_datafree,
}


def loss_function(family: BoundFamily) -> Callable:
    try:
        return _J[family]
    except KeyError:
        raise ValueError(f"{family} has no alpha-indexed loss function") from None


def critical_argument(alpha: float, family: BoundFamily) -> float:
    """Smallest scaled tail at which the family's loss reaches the vacuous ceiling."""
    _check_alpha(alpha)
    if _is_kl(alpha):
        return math.inf
    if family is BoundFamily.BASIC:
        return 1.0 / _basic_params(alpha)[0]
    if family is BoundFamily.IMPROVED:
        return 1.0 / _improved_params(alpha)[0]
    if family is BoundFamily.DATA_FREE:
        if alpha >= _TWO_THIRDS - 1e-12:
            return 1.0 / _improved_params(alpha)[0]
        return 2.0 / (1.0 - alpha)
    raise ValueError(f"{family} has no critical argument")


@dataclass(frozen=True)
class Certificate:
    alpha: float
    family: BoundFamily
    c_sub: float
    tail: float
    bound: float
    saturated: bool
    notes: tuple = ()

    def recompute(self) -> float:
        if self.family is BoundFamily.PINSKER_TV:
            return math.sqrt(0.5 * self.c_sub * self.tail)
        return float(loss_function(self.family)(self.alpha, self.c_sub * self.tail))


def make_certificate(alpha: float, family: BoundFamily, c_sub: float, tail: float) -> Certificate:
    if family is BoundFamily.PINSKER_TV:
        raise ValueError("use certify_tv for total-variation certificates")
    _check_alpha(alpha)
    if c_sub < 0 or tail < 0:
        raise ValueError("Sobolev constant and tail must be nonnegative")
    arg = c_sub * tail
    bound = float(loss_function(family)(alpha, arg))
    saturated = arg >= critical_argument(alpha, family)
    notes = []
    if saturated:
        notes.append("vacuous: bound equals the plateau 1/(alpha(1-alpha)); increase r")
    if family is BoundFamily.DATA_FREE and alpha < _TWO_THIRDS - 1e-12:
        notes.append("alpha < 2/3 uses the crude linear majorant t/(2 alpha)")
    return Certificate(alpha, family, c_sub, tail, bound, bool(saturated), tuple(notes))


def certify(alpha: float, family: BoundFamily, budget: SobolevBudget, spec: Spectrum, r: int) -> Certificate:
    """Certificate J(C_sub * sum_{k>r} lambda_k) with C_sub taken at beta = min(1/alpha, 2)."""
    _check_alpha(alpha)
    c = c_beta_sub(budget, min(1.0 / alpha, 2.0))
    return make_certificate(alpha, family, c, tail_sum(spec, r))


def certify_tv_tail(c1_sub: float, tail: float) -> Certificate:
    if c1_sub < 0 or tail < 0:
        raise ValueError("Sobolev constant and tail must be nonnegative")
    bound = math.sqrt(0.5 * c1_sub * tail)
    notes = ("vacuous for total variation (bound >= 1)",) if bound >= 1.0 else ()
    return Certificate(1.0, BoundFamily.PINSKER_TV, c1_sub, tail, bound, False, notes)


def certify_tv(budget: SobolevBudget, spec: Spectrum, r: int) -> Certificate:
    """Total-variation certificate sqrt(C_1 tail / 2) via Pinsker and the KL certificate."""
    return certify_tv_tail(budget.c1_sub, tail_sum(spec, r))


def sobolev_check_1d(
    beta: float,
    f: Callable[[np.ndarray], np.ndarray],
    quadrature_n: int = 200,
    df: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    c: float = 1.0,
) -> tuple[float, float]:
    """Both sides of the beta-Sobolev inequality for N(0, 1), by Gauss-Hermite quadrature.

    Returns (phi_beta-entropy of f, c/2 * E[f^beta |(ln f)'|^2]). ``df`` is the
    derivative of f; a central difference is used when it is omitted.
    """
    if not 1 <= beta <= 2:
        raise ValueError("beta must lie in [1, 2]")
    x, w = hermegauss(quadrature_n)
    w = w / w.sum()
    fv = np.asarray(f(x), dtype=float)
    if df is None:
        h = 1e-5 * (1.0 + np.abs(x))
        dfv = (np.asarray(f(x + h), dtype=float) - np.asarray(f(x - h), dtype=float)) / (2 * h)
    else:
        dfv = np.asarray(df(x), dtype=float)
    if np.any(fv <= 0):
        raise ValueError("f must be positive")
    lhs = phi_entropy(beta, fv, w)
    rhs = 0.5 * c * float(np.sum(w * fv ** (beta - 2.0) * dfv**2))
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise FloatingPointError("quadrature produced non-finite values")
    return lhs, rhs
