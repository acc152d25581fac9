"""Single-pass least squares through the Q-less R of [A b]."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .counters import record
from .errors import BreakdownError, RankDeficientError
from .gramqr import cholqr2, svqb2
from .matrix import EPS, as_tall
from .plan import PanelPlan
from .tsqr import tsqr_qless

METHODS = ("tsqr", "cholqr2", "svqb2")


class LstsqResult(NamedTuple):
    x: np.ndarray
    residual_norm: float


def extended_matrix(A, rhs) -> np.ndarray:
    """[A rhs] as an m x (n+1) Fortran array.

    If ``rhs`` already sits right after A's last column in one Fortran buffer
    the result is a view; otherwise the copy is recorded as staging traffic.
    """
    A = np.asarray(A)
    rhs = np.asarray(rhs)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-D, got shape {A.shape}")
    m, n = A.shape
    if rhs.ndim == 2 and rhs.shape[1] == 1:
        rhs = rhs[:, 0]
    if rhs.shape != (m,):
        raise ValueError(f"rhs must have length {m}, got shape {rhs.shape}")
    base = A.base if A.base is not None else None
    if (
        isinstance(base, np.ndarray)
        and base is rhs.base
        and base.dtype == np.float64
        and base.flags.f_contiguous
        and base.shape == (m, n + 1)
        and A.ctypes.data == base.ctypes.data
        and rhs.ctypes.data == base.ctypes.data + 8 * m * n
    ):
        return base
    E = np.empty((m, n + 1), order="F")
    E[:, :n] = A
    E[:, n] = rhs
    record(staging_reads=m * (n + 1), staging_writes=m * (n + 1))
    return E


def _triangular_z(E, method: str, plan: PanelPlan | None) -> np.ndarray:
    if method == "tsqr":
        return tsqr_qless(E, plan)
    if method == "cholqr2":
        n = E.shape[1] - 1
        try:
            return cholqr2(E, plan)
        except BreakdownError as exc:
            if exc.index < n:
                raise RankDeficientError(f"A is numerically rank deficient (Cholesky pivot {exc.index})") from exc
            # only the rhs column is dependent: b is numerically in range(A)
            raise BreakdownError(exc.index, exc.pivot) from exc
    if method == "svqb2":
        # X ~ Q Z with Z square; a small QR turns it into an R factor
        z = svqb2(E, plan).z
        R = np.linalg.qr(z, mode="r")
        signs = np.where(np.diag(R) < 0, -1.0, 1.0)
        return signs[:, None] * R
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def solve_lstsq(A, rhs, method: str = "tsqr", plan: PanelPlan | None = None) -> LstsqResult:
    """Minimize ||A x - rhs||_2 with one streaming pass over A (for tsqr)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    E = as_tall(extended_matrix(A, rhs), name="[A rhs]")
    n = E.shape[1] - 1
    if E.shape[0] < n + 1:
        raise ValueError(f"need m >= n + 1 rows, got m={E.shape[0]}, n={n}")
    R = _triangular_z(E, method, plan)
    R11 = R[:n, :n]
    diag = np.abs(np.diag(R11))
    dtol = n * EPS * (diag.max() if n else 0.0)
    bad = np.flatnonzero(diag <= dtol)
    if bad.size:
        raise RankDeficientError(
            f"A is numerically rank deficient: |R[{bad[0]},{bad[0]}]| = {diag[bad[0]]:.3e} <= {dtol:.3e}"
        )
    x = solve_triangular(R11, R[:n, n], lower=False)
    return LstsqResult(x, float(abs(R[n, n])))
