"""Shared numerical helpers: seeding, log-domain reductions, delta-method errors."""
from __future__ import annotations

import numpy as np


class UnsupportedOperation(NotImplementedError):
    """Raised when a reference measure cannot perform the requested operation."""


class EstimatorFailure(RuntimeError):
    """A Monte Carlo estimator could not produce a finite value.

    ``n_rejected`` counts the samples whose log values were unusable.
    """

    def __init__(self, message: str, n_rejected: int = 0):
        super().__init__(message)
        self.n_rejected = n_rejected


class NumericalFailure(RuntimeError):
    """An iterative numerical routine did not converge."""


def make_rng(*seed_parts) -> np.random.Generator:
    # Philox is counter based, so streams do not depend on how work is split.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_entropy(seed_parts))))


def _entropy(parts) -> list[int]:
    words: list[int] = []
    for p in parts:
        if isinstance(p, (int, np.integer)):
            p = int(p)
            if p < 0:
                raise ValueError("seed components must be nonnegative")
            words.extend(_split_words(p))
        elif isinstance(p, str):
            words.extend(_bytes_to_words(p.encode()))
        else:
            arr = np.ascontiguousarray(np.asarray(p, dtype=np.float64))
            words.append(arr.size)
            words.extend(_bytes_to_words(arr.tobytes()))
    return words


def _split_words(v: int) -> list[int]:
    out = [v & 0xFFFFFFFF]
    v >>= 32
    while v:
        out.append(v & 0xFFFFFFFF)
        v >>= 32
    return out


def _bytes_to_words(b: bytes) -> list[int]:
    pad = (-len(b)) % 4
    return np.frombuffer(b + b"\0" * pad, dtype="<u4").astype(int).tolist()


def logmeanexp(a: np.ndarray, axis=None) -> np.ndarray:
    """log(mean(exp(a))) along ``axis``, stable for large magnitudes and -inf entries."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.mean(np.exp(a - m_safe), axis=axis, keepdims=True)) + m_safe
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


def delta_se(columns: np.ndarray, grad: np.ndarray) -> float:
    """Standard error of f(column means) given the gradient of f at the means.

    ``columns`` is (n, k): n i.i.d. replicates of k sample averages.
    """
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    n = columns.shape[0]
    if n < 2:
        return 0.0
    # Project first, then take the variance: avoids forming the covariance.
    proj = columns @ np.asarray(grad, dtype=float)
    return float(np.std(proj, ddof=1) / np.sqrt(n))


def check_log_values(values: np.ndarray, what: str) -> np.ndarray:
    """Reject NaN and +inf log values; -inf (a zero density) is allowed."""
    values = np.asarray(values, dtype=float)
    bad = np.isnan(values) | (values == np.inf)
    if bad.any():
        raise EstimatorFailure(
            f"{what}: {int(bad.sum())} of {values.size} samples gave non-finite log values",
            n_rejected=int(bad.sum()),
        )
    return values


def delta_se_fn(columns: np.ndarray, f, rel_step: float = 1e-6) -> float:
    """Delta-method standard error of f(column means), gradient by central differences."""
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    m = columns.mean(axis=0)
    grad = np.empty(m.size)
    for k in range(m.size):
        h = rel_step * max(abs(m[k]), 1e-300)
        hi, lo = m.copy(), m.copy()
        hi[k] += h
        lo[k] -= h
        grad[k] = (f(hi) - f(lo)) / (2 * h)
    return delta_se(columns, grad)
