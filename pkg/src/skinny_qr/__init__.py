"""Q-less QR of tall, very skinny matrices.

Gram-based CholQR2 and SVQB2, two-stage Householder TSQR, a single-pass
least-squares solver, traffic counters and a Roofline performance model.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, available, use_backend
from .counters import TrafficCounters, record, track
from .errors import (
    BadMagicError,
    BreakdownError,
    ConvergenceError,
    DimensionError,
    MatrixFormatError,
    RankDeficientError,
    SingularFactorError,
    SizeOverflowError,
    TruncatedFileError,
    ZeroMatrixError,
)
from .gram import tsmmttsmm, tsmRttsmR, tsmttsm
from .gramqr import (
    EigenDecomp,
    QzResult,
    cholesky,
    cholqr2,
    eigh_small,
    orthogonality_residual,
    reconstruct_q,
    svqb2,
    svqb_pass,
)
from .lstsq import LstsqResult, solve_lstsq
from .matgen import SpectrumSpec, generate
from .matrix import frobenius_norm, matrix_read, matrix_write, sign_normalize
from .perfmodel import (
    HardwareSpec,
    composite_time,
    intensity,
    load_hardware,
    machine_balance,
    predict_time,
    roofline_rate,
)
from .plan import PanelPlan, gram_plan, set_num_threads, tsqr_plan
from .tsqr import TrapezoidalWorkspace, block_qless_qr, factor_trapezoidal, reference_hhqr, tsqr_qless
