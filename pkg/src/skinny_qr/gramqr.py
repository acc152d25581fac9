"""Gramian-based Q-less factorizations: CholQR2 and SVQB2.

Only the two streaming Gram kernels touch X; the Cholesky and eigenvalue
steps work on n x n matrices on the calling thread.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import BreakdownError, ZeroMatrixError
from .gram import OP_MATMUL, OP_SOLVE, check_triangular, stream_transform, tsmmttsmm, tsmRttsmR, tsmttsm
from .matrix import EPS, as_tall
from .plan import PanelPlan, gram_plan

TOL_ORTH = 1e-12
TRUNC_FACTOR = 10.0
JACOBI_MAX_SWEEPS = 30
MAX_EIGH_ORDER = 128


class EigenDecomp(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray


@dataclass(frozen=True)
class QzResult:
    """X B has orthonormal columns (the first ``rank`` of them) and X ~ (X B) Z."""

    transform: np.ndarray
    z: np.ndarray
    singular_values: np.ndarray
    rank: int
    # per-pass transforms, X B = (X B_1) B_2
    passes: tuple[np.ndarray, ...] = ()

    def basis(self, X, plan: PanelPlan | None = None) -> np.ndarray:
        """Materialize Q = X B pass by pass (one streaming pass over X).

        Use the plan the factorization ran with to reproduce its intermediate
        X B_1 exactly.
        """
        X = as_tall(X)
        mats = self.passes or (self.transform,)
        return stream_transform(X, [(OP_MATMUL, B) for B in mats], plan)


def _symmetric(C, name="C") -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"{name} must be square, got shape {C.shape}")
    return C


def cholesky(C) -> np.ndarray:
    """Upper-triangular R with R^T R = C.

    Raises :class:`BreakdownError` when a pivot drops to n * eps * max|C| or
    below.
    """
    C = _symmetric(C)
    n = C.shape[0]
    tol = n * EPS * (np.abs(C).max() if n else 0.0)
    R = np.zeros((n, n), order="F")
    for j in range(n):
        col = R[:j, j]
        d = C[j, j] - col @ col
        if not d > tol:
            raise BreakdownError(j, float(d))
        rjj = np.sqrt(d)
        R[j, j] = rjj
        R[j, j + 1 :] = (C[j, j + 1 :] - col @ R[:j, j + 1 :]) / rjj
    return R


def cholqr2(X, plan: PanelPlan | None = None, *, return_passes: bool = False):
    """Q-less Cholesky-QR applied twice; returns R = R2 R1.

    With ``return_passes`` also returns ``(R1, R2)``; reconstructing Q through
    both factors (``reconstruct_q(X, R1, R2)``) keeps it orthonormal to
    working precision, whereas X R^-1 in one step loses about kappa * eps.
    """
    X = as_tall(X)
    m, n = X.shape
    if plan is None:
        plan = gram_plan(m, n)
    R1 = cholesky(tsmttsm(X, plan, check_finite=False))
    R2 = cholesky(tsmRttsmR(X, R1, plan, check_finite=False))
    R = np.asfortranarray(np.triu(R2 @ R1))
    if return_passes:
        return R, (R1, R2)
    return R


def eigh_small(C) -> EigenDecomp:
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    A rotation is skipped when |c_pq| <= eps * sqrt(|c_pp c_qq|); sweeps stop
    once nothing rotates, which leaves off(C) well under 10 n eps ||C||_F.
    """
    C = _symmetric(C)
    n = C.shape[0]
    if n > MAX_EIGH_ORDER:
        raise ValueError(f"eigh_small handles n <= {MAX_EIGH_ORDER}, got {n}")
    upper = np.triu(C)
    S = np.asfortranarray(upper + np.triu(upper, 1).T)
    values, vectors, _ = _backend.kernels.jacobi_eigh(S, EPS, JACOBI_MAX_SWEEPS)
    order = np.argsort(-values, kind="stable")
    return EigenDecomp(values[order], np.asfortranarray(vectors[:, order]))


def _svqb_factors(C, *, with_sigma: bool = True):
    n = C.shape[0]
    d = np.diag(C).copy()
    pos = d > 0
    scale = np.zeros(n)
    scale[pos] = 1.0 / np.sqrt(d[pos])
    lam, U = eigh_small(scale[:, None] * C * scale[None, :])
    if not lam[0] > 0:
        raise ZeroMatrixError("every eigenvalue of the Gram matrix was truncated; X is numerically zero")
    keep = lam >= TRUNC_FACTOR * n * EPS * lam[0]
    rank = int(keep.sum())
    inv_root = np.zeros(n)
    inv_root[keep] = 1.0 / np.sqrt(lam[keep])
    root = np.zeros(n)
    root[keep] = np.sqrt(lam[keep])
    unscale = np.zeros(n)
    unscale[pos] = np.sqrt(d[pos])
    B = np.asfortranarray((scale[:, None] * U) * inv_root[None, :])
    Z = np.asfortranarray((root[:, None] * U.T) * unscale[None, :])
    sigma = None
    if with_sigma:
        sigma = np.sqrt(np.clip(eigh_small(C).values, 0.0, None))
    return B, Z, sigma, rank


def svqb_pass(X, C):
    """One SVQB step on a precomputed C = X^T X.

    Returns ``(B, sigma, rank)``: X B has ``rank`` orthonormal columns followed
    by exact zero columns.
    """
    X = np.asarray(X)
    C = _symmetric(C)
    if X.ndim != 2 or C.shape[0] != X.shape[1]:
        raise ValueError(f"Gram matrix {C.shape} does not match X {X.shape}")
    B, _, sigma, rank = _svqb_factors(C)
    return B, sigma, rank


def svqb2(X, plan: PanelPlan | None = None) -> QzResult:
    X = as_tall(X)
    m, n = X.shape
    if plan is None:
        plan = gram_plan(m, n)
    B1, Z1, sigma, _ = _svqb_factors(tsmttsm(X, plan, check_finite=False))
    B2, Z2, _, rank = _svqb_factors(tsmmttsmm(X, B1, plan, check_finite=False), with_sigma=False)
    return QzResult(
        transform=np.asfortranarray(B1 @ B2),
        z=np.asfortranarray(Z2 @ Z1),
        singular_values=sigma,
        rank=rank,
        passes=(B1, B2),
    )


def reconstruct_q(X, *factors, plan: PanelPlan | None = None) -> np.ndarray:
    """Q = X R_1^-1 R_2^-1 ... streamed panel-wise in a single pass over X."""
    if not factors:
        raise TypeError("reconstruct_q needs at least one triangular factor")
    X = as_tall(X)
    n = X.shape[1]
    mats = [check_triangular(R, n) for R in factors]
    return stream_transform(X, [(OP_SOLVE, R) for R in mats], plan)


def orthogonality_residual(Q, rank: int | None = None, plan: PanelPlan | None = None) -> float:
    """||Q_r^T Q_r - I||_2 over the leading ``rank`` columns."""
    C = tsmttsm(Q, plan)
    r = C.shape[0] if rank is None else rank
    return float(np.linalg.norm(C[:r, :r] - np.eye(r), 2))
