"""Exception types raised by skinny_qr."""

from __future__ import annotations

import numpy as np


class MatrixFormatError(ValueError):
    """Malformed ``.tskm`` matrix file."""


class BadMagicError(MatrixFormatError):
    pass


class TruncatedFileError(MatrixFormatError):
    pass


class DimensionError(MatrixFormatError):
    pass


class SizeOverflowError(MatrixFormatError):
    pass


class BreakdownError(np.linalg.LinAlgError):
    """Cholesky pivot not positive: the Gram matrix is numerically singular.

    Usually means the input is too ill-conditioned for a Gramian method
    (kappa above roughly eps**-0.5); use ``svqb2`` or ``tsqr_qless`` instead.
    """

    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(
            f"non-positive Cholesky pivot {pivot:.3e} at index {index}: "
            "condition number too large; use svqb2 or tsqr"
        )


class SingularFactorError(np.linalg.LinAlgError):
    def __init__(self, index: int, value: float, dtol: float):
        self.index = index
        self.value = value
        self.dtol = dtol
        super().__init__(
            f"triangular factor is singular: |R[{index},{index}]| = {abs(value):.3e} <= {dtol:.3e}"
        )


class ZeroMatrixError(np.linalg.LinAlgError):
    pass


class RankDeficientError(np.linalg.LinAlgError):
    pass


class ConvergenceError(np.linalg.LinAlgError):
    pass
