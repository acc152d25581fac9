"""Two-stage Q-less Householder TSQR.

Stage 1 factors k contiguous row blocks independently; each block is
streamed in panels of b rows through an in-place Householder QR of the
trapezoidal pencil [W; R] (W the fresh panel, R the running triangle). The k
resulting triangles are stacked into Y (k*n x n) and stage 2 factors Y with
one more streaming call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .counters import record
from .matrix import as_tall, sign_normalize
from .plan import PanelPlan, map_blocks, tsqr_panel_rows, tsqr_plan


@dataclass
class TrapezoidalWorkspace:
    """(b + n) x n pencil: rows [0, b) hold W, rows [b, b + n) the triangle R."""

    b: int
    n: int
    data: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.data is None:
            self.data = np.zeros((self.b + self.n, self.n), order="F")
        if self.data.shape != (self.b + self.n, self.n) or not self.data.flags.f_contiguous:
            raise ValueError(f"workspace must be a Fortran ({self.b + self.n}, {self.n}) array")

    @classmethod
    def from_blocks(cls, W, R=None) -> "TrapezoidalWorkspace":
        W = np.asarray(W, dtype=np.float64)
        b, n = W.shape
        ws = cls(b, n)
        ws.W[:] = W
        if R is not None:
            ws.R[:] = np.triu(R)
        return ws

    @property
    def W(self) -> np.ndarray:
        return self.data[: self.b]

    @property
    def R(self) -> np.ndarray:
        return self.data[self.b :]

    def result(self) -> np.ndarray:
        """Top n x n block of the pencil (upper triangular after factoring)."""
        return np.array(self.data[: self.n], order="F")


def factor_trapezoidal(ws: TrapezoidalWorkspace) -> None:
    """Overwrite the pencil with Q^T [W; R]; R' lands in its top n rows."""
    _backend.kernels.factor_trapezoidal(ws.data, ws.b)


def _nominal_flops(rows: int, b: int, n: int) -> int:
    # a panel of r rows is one 2(r+1)n^2 trapezoidal step
    return 2 * (rows + -(-rows // b)) * n * n


def _executed_flops(rows: int, b: int, n: int) -> int:
    bw = max(b, n)
    per_panel = 2 * (bw + 1) * n + 4 * (bw + 2) * n * (n - 1) // 2
    return -(-rows // b) * per_panel


def block_qless_qr(Xi, b: int) -> np.ndarray:
    """Stream one row block through the trapezoidal kernel; returns its R."""
    if b < 1:
        raise ValueError(f"panel rows must be >= 1, got {b}")
    Xi = np.asfortranarray(np.asarray(Xi, dtype=np.float64))
    rows, n = Xi.shape
    R = _backend.kernels.block_qless(Xi, 0, rows, b)
    record(reads=rows * n, flops=_nominal_flops(rows, b, n), executed=_executed_flops(rows, b, n))
    return sign_normalize(R)


def tsqr_stage1(X, plan: PanelPlan) -> np.ndarray:
    """Stacked block triangles Y, exactly ``num_blocks * n`` rows."""
    X = as_tall(X, check_finite=False)
    m, n = X.shape
    b = plan.panel_rows
    kern = _backend.kernels
    blocks = plan.blocks(m)
    # block results land at fixed offsets regardless of scheduling
    parts = map_blocks(lambda s, e: kern.block_qless(X, s, e, b), blocks)
    Y = np.asfortranarray(np.vstack(parts))
    record(
        reads=m * n,
        flops=sum(_nominal_flops(e - s, b, n) for s, e in blocks),
        executed=sum(_executed_flops(e - s, b, n) for s, e in blocks),
    )
    return Y


def tsqr_qless(X, plan: PanelPlan | None = None, *, check_finite: bool = True) -> np.ndarray:
    """R factor of X with nonnegative diagonal; X is read exactly once.

    Exactly zero columns give exactly zero diagonal entries.
    """
    X = as_tall(X, check_finite=check_finite)
    m, n = X.shape
    if plan is None:
        plan = tsqr_plan(m, n)
    else:
        tsqr_panel_rows(n)  # column limit
    Y = tsqr_stage1(X, plan)
    R = _backend.kernels.block_qless(Y, 0, Y.shape[0], plan.panel_rows)
    return sign_normalize(R)


def reference_hhqr(X) -> np.ndarray:
    """Unblocked Householder QR over the whole matrix (oracle and baseline).

    Counters carry the read-X-once / write-reflectors-once idealization.
    """
    X = as_tall(X)
    m, n = X.shape
    A = np.array(X, order="F")
    executed = 0
    for k in range(n):
        x = A[k:, k]
        alpha = x[0]
        sigma2 = float(x[1:] @ x[1:])
        if sigma2 == 0.0:
            continue
        beta = -math.copysign(math.sqrt(alpha * alpha + sigma2), alpha)
        v = x / (alpha - beta)
        v[0] = 1.0
        tau = (beta - alpha) / beta
        if k + 1 < n:
            T = A[k:, k + 1 :]
            T -= np.outer(tau * v, v @ T)
        A[k, k] = beta
        A[k + 1 :, k] = 0.0
        executed += 4 * (m - k) * (n - k)
    record(reads=m * n, writes=m * n, flops=2 * m * n * n, executed=executed)
    return sign_normalize(np.triu(A[:n]))
