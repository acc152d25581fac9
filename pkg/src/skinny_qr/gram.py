"""Tall-skinny Gram kernels: plain, fused with a triangular solve, and fused
with a small matrix product.

Each kernel is a blocked reduction: the row blocks of the plan are reduced in
parallel into private n x n partial sums which are then combined in ascending
block order. Within a block, panels of ``panel_rows`` rows are loaded once,
transformed in a b x n workspace and folded into the partial Gram matrix by a
rank-b update, so the m x n intermediate is never formed.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from .counters import record
from .errors import SingularFactorError
from .matrix import EPS, as_square, as_tall
from .plan import PanelPlan, gram_plan, map_blocks

OP_PLAIN, OP_SOLVE, OP_MATMUL = 0, 1, 2


def check_triangular(R, n: int, name: str = "R") -> np.ndarray:
    """Return R as an upper-triangular Fortran array, rejecting tiny pivots.

    The singularity threshold is n * eps * max|diag(R)|.
    """
    R = as_square(R, n, name=name)
    d = np.abs(np.diag(R))
    dtol = n * EPS * (d.max() if n else 0.0)
    bad = np.flatnonzero(d <= dtol)
    if bad.size:
        i = int(bad[0])
        raise SingularFactorError(i, float(R[i, i]), dtol)
    return np.asfortranarray(np.triu(R))


def _reduce(X, plan, op, M):
    m, n = X.shape
    if plan is None:
        plan = gram_plan(m, n)
    kern = _backend.kernels
    parts = map_blocks(
        lambda s, e: kern.gram_block(X, s, e, plan.panel_rows, op, M),
        plan.blocks(m),
        ordered=plan.deterministic,
    )
    C = parts[0]
    for P in parts[1:]:
        C = C + P
    upper = np.triu(C)
    return np.asfortranarray(upper + np.triu(upper, 1).T)


def tsmttsm(X, plan: PanelPlan | None = None, *, check_finite: bool = True) -> np.ndarray:
    """C = X^T X."""
    X = as_tall(X, check_finite=check_finite)
    m, n = X.shape
    C = _reduce(X, plan, OP_PLAIN, None)
    record(reads=m * n, flops=2 * m * n * n, executed=m * n * (n + 1))
    return C


def tsmRttsmR(X, R, plan: PanelPlan | None = None, *, check_finite: bool = True) -> np.ndarray:
    """C = (X R^-1)^T (X R^-1) for upper-triangular R, one pass over X."""
    X = as_tall(X, check_finite=check_finite)
    m, n = X.shape
    R = check_triangular(R, n)
    C = _reduce(X, plan, OP_SOLVE, R)
    record(reads=m * n, flops=3 * m * n * n, executed=m * n * n + m * n * (n + 1))
    return C


def tsmmttsmm(X, B, plan: PanelPlan | None = None, *, check_finite: bool = True) -> np.ndarray:
    """C = (X B)^T (X B) for a square n x n B, one pass over X."""
    X = as_tall(X, check_finite=check_finite)
    m, n = X.shape
    B = as_square(B, n, name="B")
    C = _reduce(X, plan, OP_MATMUL, B)
    record(reads=m * n, flops=4 * m * n * n, executed=2 * m * n * n + m * n * (n + 1))
    return C


def stream_transform(X, ops, plan: PanelPlan | None = None) -> np.ndarray:
    """Apply a chain of right solves/products to X panel by panel.

    ``ops`` is a sequence of ``(OP_SOLVE, R)`` or ``(OP_MATMUL, B)``. Panels go
    through exactly the arithmetic the fused Gram kernels use, so with the same
    plan the intermediate after the first op is bitwise identical to the one
    those kernels reduced.
    """
    X = as_tall(X)
    m, n = X.shape
    ops = [(op, as_square(M, n, name="transform")) for op, M in ops]
    if plan is None:
        plan = gram_plan(m, n)
    out = np.empty((m, n), order="F")
    kern = _backend.kernels
    map_blocks(lambda s, e: kern.apply_block(X, out, s, e, plan.panel_rows, ops), plan.blocks(m))
    flops = sum((m * n * n if op == OP_SOLVE else 2 * m * n * n) for op, _ in ops)
    record(reads=m * n, writes=m * n, flops=flops, executed=flops)
    return out
