"""Dense symmetric eigensolver (cyclic Jacobi) and small matrix helpers."""
from __future__ import annotations

import functools

import numpy as np

from ._util import NumericalFailure

_EPS = np.finfo(float).eps


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds (n even) of disjoint index pairs covering all pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Rotations on disjoint index pairs commute, so each round of the
    round-robin schedule is applied as one vectorized update.

    Returns
    -------
    w : (n,) eigenvalues, unsorted.
    v : (n, n) orthonormal eigenvectors as columns.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n <= 1:
        return np.diag(a).copy(), v

    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    tol = 4.0 * n * _EPS * scale
    rounds = _round_robin(n)

    offdiag = ~np.eye(n, dtype=bool)
    prev_off = np.inf
    for _ in range(max_sweeps):
        # summed directly: norm(a)^2 - norm(diag)^2 cancels down to sqrt(eps) accuracy
        off = float(np.linalg.norm(a[offdiag]))
        if off <= tol or off >= prev_off:
            # second test: rounding floor reached, further sweeps cannot help
            break
        prev_off = off
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            nz = apq != 0.0
            with np.errstate(over="ignore"):
                # theta = inf for subnormal a_pq gives t = 0, which is the right limit
                theta = np.where(nz, (aqq - app) / np.where(nz, 2.0 * apq, 1.0), 0.0)
                t = np.where(nz, np.copysign(1.0, theta) / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = ap * c - aq * s
            a[:, q] = ap * s + aq * c
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        raise NumericalFailure(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    return np.diag(a).copy(), v


def sorted_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs in descending order with a deterministic sign and tie convention.

    Each eigenvector is signed so its first non-negligible entry is positive.
    Eigenvalues equal to within rounding are ordered by their eigenvectors,
    largest first component first, then lexicographically.
    """
    w, v = jacobi_eigh(a)
    n = w.size
    for j in range(n):
        col = v[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12)
        if big.size and col[big[0]] < 0:
            v[:, j] = -col
    tie_tol = 1e-12 * max(1.0, float(np.max(np.abs(w))) if n else 1.0)

    def cmp(i, j):
        if abs(w[i] - w[j]) > tie_tol:
            return -1 if w[i] > w[j] else 1
        for x, y in zip(v[:, i], v[:, j]):
            if abs(x - y) > 1e-12:
                return -1 if x > y else 1
        return 0

    order = sorted(range(n), key=functools.cmp_to_key(cmp))
    return w[order], v[:, order]


def sym_sqrt(s: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Symmetric square root (or inverse square root) of an SPD matrix."""
    check_spd(s)
    w, v = jacobi_eigh(s)
    if np.min(w) <= 0:
        raise ValueError("matrix is not positive definite")
    root = np.sqrt(w) if not inverse else 1.0 / np.sqrt(w)
    out = (v * root) @ v.T
    return 0.5 * (out + out.T)


def check_spd(s: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and positive definiteness via a Cholesky attempt."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(s, s.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(s).max(initial=0.0))):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} is not positive definite") from exc
    return s


def orth_complement(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of range(u), u with orthonormal columns."""
    u = np.asarray(u, dtype=float)
    d, r = u.shape
    if r == 0:
        return np.eye(d)
    q, _ = np.linalg.qr(u, mode="complete")
    return q[:, r:]
