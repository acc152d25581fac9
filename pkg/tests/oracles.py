"""Independent reference computations used by the tests.

None of these share code with the package kernels.
"""

from __future__ import annotations

import mpmath
import numpy as np
import scipy.linalg


def lapack_r(X) -> np.ndarray:
    """R from LAPACK geqrf, sign-normalized."""
    R = scipy.linalg.qr(np.asarray(X, dtype=np.float64), mode="r")[0][: X.shape[1]]
    s = np.where(np.diag(R) < 0, -1.0, 1.0)
    return s[:, None] * R


def mp_gram(X, dps: int = 60) -> mpmath.matrix:
    """X^T X accumulated exactly enough in multiprecision."""
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    with mpmath.workdps(dps):
        cols = [[mpmath.mpf(float(v)) for v in X[:, j]] for j in range(n)]
        G = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = mpmath.fdot(cols[i], cols[j])
    return G


def mp_singular_values(X, dps: int = 60) -> list:
    """Singular values of X, descending, from the multiprecision Gram eigenproblem."""
    with mpmath.workdps(dps):
        G = mp_gram(X, dps)
        lam = mpmath.eigsy(G, eigvals_only=True)
        vals = sorted((mpmath.sqrt(max(v, 0)) for v in lam), reverse=True)
    return vals


def longdouble_normal_solve(A, b) -> np.ndarray:
    """x from A^T A x = A^T b, Gram and Cholesky solve in extended precision."""
    A = np.asarray(A, dtype=np.longdouble)
    b = np.asarray(b, dtype=np.longdouble)
    G = A.T @ A
    r = A.T @ b
    n = G.shape[0]
    L = np.zeros_like(G)
    for j in range(n):
        d = G[j, j] - L[j, :j] @ L[j, :j]
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (G[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    y = np.zeros(n, dtype=np.longdouble)
    for i in range(n):
        y[i] = (r[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.zeros(n, dtype=np.longdouble)
    for i in reversed(range(n)):
        x[i] = (y[i] - L[i + 1 :, i] @ x[i + 1 :]) / L[i, i]
    return x


def residual_longdouble(A, x, b) -> float:
    A = np.asarray(A, dtype=np.longdouble)
    r = A @ np.asarray(x, dtype=np.longdouble) - np.asarray(b, dtype=np.longdouble)
    return float(np.sqrt(r @ r))


def rel_fro(A, B) -> float:
    return float(np.linalg.norm(np.asarray(A) - np.asarray(B)) / np.linalg.norm(B))


def numerical_rank(X, factor: float = 10.0) -> int:
    """Count of diag-scaled Gram eigenvalues at or above factor * n * eps * lambda_max."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    G = X.T @ X
    d = np.diag(G)
    s = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    lam = np.linalg.eigvalsh(s[:, None] * G * s[None, :])
    return int(np.sum(lam >= factor * n * np.finfo(float).eps * lam.max()))
