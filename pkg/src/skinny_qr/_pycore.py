"""Pure numpy/scipy kernels; same interface as the compiled ``_core``.

Panel Gram updates go through the BLAS wrappers in :mod:`scipy.linalg.blas`
so both backends use the same reduction arithmetic per panel.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import blas

from .errors import ConvergenceError

OP_PLAIN, OP_SOLVE, OP_MATMUL = 0, 1, 2


def _load_panel(X, p, q, op, M):
    W = np.array(X[p:q], order="F")
    if op == OP_SOLVE:
        W = blas.dtrsm(1.0, M, W, side=1, lower=0, overwrite_b=1)
    elif op == OP_MATMUL:
        W = blas.dgemm(1.0, W, M)
    return W


def gram_block(X, start, stop, panel_rows, op=OP_PLAIN, M=None):
    """Upper triangle of sum over panels of op(W)^T op(W), rows [start, stop)."""
    n = X.shape[1]
    C = np.zeros((n, n), order="F")
    for p in range(start, stop, panel_rows):
        W = _load_panel(X, p, min(p + panel_rows, stop), op, M)
        C = blas.dsyrk(1.0, W, trans=1, beta=1.0, c=C, overwrite_c=1, lower=0)
    return C


def apply_block(X, out, start, stop, panel_rows, ops):
    """out[start:stop] = X[start:stop] op_1(M_1) op_2(M_2) ..., panel by panel."""
    for p in range(start, stop, panel_rows):
        q = min(p + panel_rows, stop)
        W = None
        for k, (op, M) in enumerate(ops):
            if k == 0:
                W = _load_panel(X, p, q, op, M)
            elif op == OP_SOLVE:
                W = blas.dtrsm(1.0, M, W, side=1, lower=0, overwrite_b=1)
            else:
                W = blas.dgemm(1.0, W, M)
        out[p:q] = W


def _house(x):
    """Reflector zeroing x[1:] in place; returns (tau, v) with v[0] = 1."""
    alpha = x[0]
    sigma2 = float(x[1:] @ x[1:])
    v = np.zeros_like(x)
    v[0] = 1.0
    if sigma2 == 0.0:
        return 0.0, v
    beta = -math.copysign(math.sqrt(alpha * alpha + sigma2), alpha)
    v[1:] = x[1:] * (1.0 / (alpha - beta))
    x[0] = beta
    x[1:] = 0.0
    return (beta - alpha) / beta, v


def factor_trapezoidal(P, bw):
    """In-place Householder QR of the pencil [W; R] (bw + n rows, R upper).

    Columns are taken in pairs; the two reflectors are applied jointly to the
    trailing columns. On exit the R factor sits in rows 0..n-1.
    """
    n = P.shape[1]
    for i in range(0, n, 2):
        hi = bw + i + 1
        tau_v, v = _house(P[i:hi, i])
        if i + 1 == n:
            break
        c = P[i:hi, i + 1]
        c -= (tau_v * (v @ c)) * v
        tau_w, w = _house(P[i + 1 : hi + 1, i + 1])
        if i + 2 < n:
            V = np.zeros((hi + 1 - i, 2))
            V[:-1, 0] = v
            V[1:, 1] = w
            T = P[i : hi + 1, i + 2 :]
            S = V.T @ T
            a = tau_v * S[0]
            b = tau_w * (S[1] - (V[:, 1] @ V[:, 0]) * a)
            T -= np.outer(V[:, 0], a) + np.outer(V[:, 1], b)


def block_qless(X, start, stop, panel_rows):
    """Q-less Householder QR of rows [start, stop) streamed in panels."""
    n = X.shape[1]
    bw = max(panel_rows, n)
    P = np.zeros((bw + n, n), order="F")
    for p in range(start, stop, panel_rows):
        q = min(p + panel_rows, stop)
        P[: q - p] = X[p:q]
        P[q - p : bw] = 0.0
        factor_trapezoidal(P, bw)
        P[bw:] = P[:n]
    return np.array(P[bw:], order="F")


def jacobi_eigh(A, tol, max_sweeps):
    """Cyclic two-sided Jacobi. Returns (eigenvalues, eigenvectors, sweeps), unsorted."""
    A = np.array(A, dtype=np.float64, order="F")
    n = A.shape[0]
    V = np.eye(n, order="F")
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app, aqq = A[p, p], A[q, q]
                if abs(apq) <= tol * math.sqrt(abs(app * aqq)):
                    continue
                rotated = True
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp, colq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                A[p, :] = A[:, p]
                A[q, :] = A[:, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            return np.diag(A).copy(), V, sweep
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
