"""Dense matrix helpers and the ``.tskm`` binary format.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 in Fortran
(column-contiguous) order. The file layout mirrors memory so reading and
writing is a flat copy::

    offset  size  field
    0       4     magic b"TSKM"
    4       1     format version (1)
    5       8     m, uint64 little-endian
    13      8     n, uint64 little-endian
    21      4     label length L in bytes, uint32 little-endian
    25      L     label, UTF-8
    25+L    8*m*n payload, float64 little-endian, column order
"""

from __future__ import annotations

import os
import struct
import sys

import numpy as np

from .errors import BadMagicError, DimensionError, MatrixFormatError, SizeOverflowError, TruncatedFileError

MAGIC = b"TSKM"
VERSION = 1
_HEADER = struct.Struct("<4sBQQI")
HEADER_SIZE = _HEADER.size  # 25

EPS = float(np.finfo(np.float64).eps)


def as_tall(X, *, name: str = "X", check_finite: bool = True) -> np.ndarray:
    """Validate a factorization input and return it as a Fortran float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    m, n = X.shape
    if n < 1 or m < n:
        raise ValueError(f"{name} must be tall-skinny with rows >= cols >= 1, got {m}x{n}")
    if check_finite and not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return np.asfortranarray(X)


def as_square(B, n: int, *, name: str) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got shape {B.shape}")
    if not np.isfinite(B).all():
        raise ValueError(f"{name} contains NaN or Inf")
    return np.asfortranarray(B)


def matrix_write(path, X, label: str = "") -> None:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    m, n = X.shape
    tag = label.encode("utf-8")
    header = _HEADER.pack(MAGIC, VERSION, m, n, len(tag))
    payload = np.asarray(X, dtype="<f8").tobytes(order="F")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(tag)
            fh.write(payload)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write matrix file: {exc.strerror}", os.fspath(path)) from exc


def matrix_read(path, *, return_label: bool = False):
    """Read a ``.tskm`` file; returns the matrix (and its label if asked)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read(HEADER_SIZE)
            if len(raw) < HEADER_SIZE:
                raise TruncatedFileError(f"{path}: header truncated ({len(raw)} bytes)")
            magic, version, m, n, nlabel = _HEADER.unpack(raw)
            if magic != MAGIC:
                raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
            if version != VERSION:
                raise MatrixFormatError(f"{path}: unsupported format version {version}")
            if m == 0 or n == 0:
                raise DimensionError(f"{path}: degenerate dimensions {m}x{n}")
            if m * n > (sys.maxsize // 8):
                raise SizeOverflowError(f"{path}: {m}x{n} exceeds addressable size")
            tag = fh.read(nlabel)
            if len(tag) < nlabel:
                raise TruncatedFileError(f"{path}: label truncated")
            count = m * n
            data = np.fromfile(fh, dtype="<f8", count=count)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read matrix file: {exc.strerror}", os.fspath(path)) from exc
    if data.size != count:
        raise TruncatedFileError(f"{path}: payload has {data.size} of {count} values")
    X = data.astype(np.float64, copy=False).reshape((m, n), order="F")
    if return_label:
        return X, tag.decode("utf-8")
    return X


def _pairwise_sum(v: np.ndarray, block: int = 256) -> float:
    # blocks of `block` summed directly, then a balanced tree over block sums
    if v.size == 0:
        return 0.0
    pad = (-v.size) % block
    if pad:
        v = np.concatenate([v, np.zeros(pad)])
    partial = v.reshape(-1, block).sum(axis=1)
    while partial.size > 1:
        if partial.size % 2:
            partial = np.append(partial, 0.0)
        partial = partial[0::2] + partial[1::2]
    return float(partial[0])


def gram_reference(X, chunk: int = 256) -> np.ndarray:
    """X^T X with pairwise accumulation over row chunks (verification only).

    A single BLAS product accumulates along all m rows and, for m in the
    millions, is itself off by more than the kernels being checked.
    """
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    k = -(-m // chunk)
    P = np.zeros((k * chunk, n))
    P[:m] = X
    P = P.reshape(k, chunk, n)
    parts = np.matmul(P.transpose(0, 2, 1), P)
    while parts.shape[0] > 1:
        if parts.shape[0] % 2:
            parts = np.concatenate([parts, np.zeros((1, n, n))])
        parts = parts[0::2] + parts[1::2]
    G = parts[0]
    return (G + G.T) / 2


def frobenius_norm(X) -> float:
    X = np.asarray(X, dtype=np.float64)
    flat = X.ravel(order="F")
    scale = float(np.max(np.abs(flat))) if flat.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    return scale * np.sqrt(_pairwise_sum((flat / scale) ** 2))


def sign_normalize(R: np.ndarray) -> np.ndarray:
    """Flip rows of a triangular factor so its diagonal is nonnegative."""
    R = np.array(R, dtype=np.float64, order="F")
    neg = np.diag(R) < 0
    R[neg, :] *= -1.0
    return R
