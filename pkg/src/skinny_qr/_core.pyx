# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Interface mirrors ``skinny_qr._pycore``.

Every loop over the tall matrix runs without the GIL so row blocks can be
processed by concurrent threads. Panel Gram updates, solves and products call
BLAS through scipy's Cython bindings.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign
from libc.string cimport memcpy, memset
from scipy.linalg.cython_blas cimport dgemm, dsyrk, dtrsm

from .errors import ConvergenceError

cnp.import_array()

cdef enum:
    OP_PLAIN = 0
    OP_SOLVE = 1
    OP_MATMUL = 2


cdef void _load_panel(const double *X, Py_ssize_t ldx, Py_ssize_t p, int rows, int n,
                      int op, double *M, double *W, int ldw, double *tmp) noexcept nogil:
    cdef Py_ssize_t j
    cdef double one = 1.0, zero = 0.0
    cdef char side = b'R', upper = b'U', notrans = b'N', nonunit = b'N'
    for j in range(n):
        memcpy(&W[j * ldw], &X[p + j * ldx], rows * sizeof(double))
    if op == OP_SOLVE:
        dtrsm(&side, &upper, &notrans, &nonunit, &rows, &n, &one, M, &n, W, &ldw)
    elif op == OP_MATMUL:
        for j in range(n):
            memcpy(&tmp[j * ldw], &W[j * ldw], rows * sizeof(double))
        dgemm(&notrans, &notrans, &rows, &n, &n, &one, tmp, &ldw, M, &n, &zero, W, &ldw)


def gram_block(const double[::1, :] X, Py_ssize_t start, Py_ssize_t stop,
               Py_ssize_t panel_rows, int op=OP_PLAIN, M=None):
    cdef int n = X.shape[1]
    cdef Py_ssize_t ldx = X.shape[0]
    cdef int ldw = <int>panel_rows
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] C = np.zeros((n, n), order="F")
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] W = np.empty((panel_rows, n), order="F")
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] T = np.empty((panel_rows if op == OP_MATMUL else 1, n), order="F")
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] Mf
    cdef double *mp = NULL
    if op != OP_PLAIN:
        Mf = np.asfortranarray(M, dtype=np.float64)
        mp = &Mf[0, 0]
    if stop <= start:
        return C
    cdef const double *xp = &X[0, 0]
    cdef double *wp = &W[0, 0]
    cdef double *tp = &T[0, 0]
    cdef double *cp = &C[0, 0]
    cdef double one = 1.0
    cdef char upper = b'U', trans = b'T'
    cdef Py_ssize_t p
    cdef int rows
    with nogil:
        p = start
        while p < stop:
            rows = <int>(min(p + panel_rows, stop) - p)
            _load_panel(xp, ldx, p, rows, n, op, mp, wp, ldw, tp)
            dsyrk(&upper, &trans, &n, &rows, &one, wp, &ldw, &one, cp, &n)
            p += panel_rows
    return C


def apply_block(const double[::1, :] X, double[::1, :] out, Py_ssize_t start, Py_ssize_t stop,
                Py_ssize_t panel_rows, ops):
    cdef int n = X.shape[1]
    cdef Py_ssize_t ldx = X.shape[0]
    cdef int ldw = <int>panel_rows
    cdef int nops = len(ops)
    if stop <= start or nops == 0:
        return
    kinds_arr = np.array([k for k, _ in ops], dtype=np.intc)
    mats = [np.asfortranarray(M, dtype=np.float64) for _, M in ops]
    cdef int[::1] kinds = kinds_arr
    cdef cnp.ndarray[double, ndim=3, mode="fortran"] stack = np.empty((n, n, nops), order="F")
    for k in range(nops):
        stack[:, :, k] = mats[k]
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] W = np.empty((panel_rows, n), order="F")
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] T = np.empty((panel_rows, n), order="F")
    cdef const double *xp = &X[0, 0]
    cdef double *op_ = &out[0, 0]
    cdef double *wp = &W[0, 0]
    cdef double *tp = &T[0, 0]
    cdef double *sp = &stack[0, 0, 0]
    cdef double one = 1.0, zero = 0.0
    cdef char side = b'R', upper = b'U', notrans = b'N', nonunit = b'N'
    cdef Py_ssize_t p, j, nn = n * n
    cdef int rows, k2
    with nogil:
        p = start
        while p < stop:
            rows = <int>(min(p + panel_rows, stop) - p)
            _load_panel(xp, ldx, p, rows, n, kinds[0], sp, wp, ldw, tp)
            for k2 in range(1, nops):
                if kinds[k2] == OP_SOLVE:
                    dtrsm(&side, &upper, &notrans, &nonunit, &rows, &n, &one, &sp[k2 * nn], &n, wp, &ldw)
                else:
                    for j in range(n):
                        memcpy(&tp[j * ldw], &wp[j * ldw], rows * sizeof(double))
                    dgemm(&notrans, &notrans, &rows, &n, &n, &one, tp, &ldw, &sp[k2 * nn], &n, &zero, wp, &ldw)
            for j in range(n):
                memcpy(&op_[p + j * ldx], &wp[j * ldw], rows * sizeof(double))
            p += panel_rows


cdef double _house(double *P, Py_ssize_t ld, Py_ssize_t col, Py_ssize_t lo, Py_ssize_t hi,
                   double *v) noexcept nogil:
    """Reflector for P[lo:hi, col]; v[lo:hi] receives the vector (v[lo] = 1)."""
    cdef double *x = &P[col * ld]
    cdef double alpha = x[lo], sigma2 = 0.0, beta, scale
    cdef Py_ssize_t r
    for r in range(lo + 1, hi):
        sigma2 += x[r] * x[r]
    v[lo] = 1.0
    if sigma2 == 0.0:
        for r in range(lo + 1, hi):
            v[r] = 0.0
        return 0.0
    beta = -copysign(sqrt(alpha * alpha + sigma2), alpha)
    scale = 1.0 / (alpha - beta)
    for r in range(lo + 1, hi):
        v[r] = x[r] * scale
        x[r] = 0.0
    x[lo] = beta
    return (beta - alpha) / beta


cdef void _factor_trapezoidal(double *P, Py_ssize_t ld, Py_ssize_t bw, Py_ssize_t n,
                              double *v, double *w) noexcept nogil:
    cdef Py_ssize_t i, j, jj, r, hi, jend
    cdef double tau_v, tau_w, s, vw
    cdef double a[4]
    cdef double b[4]
    cdef double *c
    i = 0
    while i < n:
        hi = bw + i + 1
        tau_v = _house(P, ld, i, i, hi, v)
        if i + 1 == n:
            break
        # apply v to column i+1
        c = &P[(i + 1) * ld]
        s = 0.0
        for r in range(i, hi):
            s += v[r] * c[r]
        s *= tau_v
        for r in range(i, hi):
            c[r] -= s * v[r]
        tau_w = _house(P, ld, i + 1, i + 1, hi + 1, w)
        # v has no entry on row hi, w none on row i
        v[hi] = 0.0
        w[i] = 0.0
        vw = 0.0
        for r in range(i, hi + 1):
            vw += v[r] * w[r]
        # 2 x 4 micro-update of the trailing columns
        j = i + 2
        while j < n:
            jend = min(j + 4, n)
            for jj in range(jend - j):
                a[jj] = 0.0
                b[jj] = 0.0
            for jj in range(jend - j):
                c = &P[(j + jj) * ld]
                for r in range(i, hi + 1):
                    a[jj] += v[r] * c[r]
                    b[jj] += w[r] * c[r]
            for jj in range(jend - j):
                a[jj] *= tau_v
                b[jj] = tau_w * (b[jj] - vw * a[jj])
                c = &P[(j + jj) * ld]
                for r in range(i, hi + 1):
                    c[r] -= a[jj] * v[r] + b[jj] * w[r]
            j = jend
        i += 2


def factor_trapezoidal(double[::1, :] P, Py_ssize_t bw):
    cdef Py_ssize_t n = P.shape[1], L = P.shape[0]
    if L != bw + n:
        raise ValueError(f"pencil must have bw + n = {bw + n} rows, got {L}")
    cdef cnp.ndarray[double, ndim=1] v = np.zeros(L + 1)
    cdef cnp.ndarray[double, ndim=1] w = np.zeros(L + 1)
    with nogil:
        _factor_trapezoidal(&P[0, 0], L, bw, n, &v[0], &w[0])


def block_qless(const double[::1, :] X, Py_ssize_t start, Py_ssize_t stop, Py_ssize_t panel_rows):
    cdef Py_ssize_t n = X.shape[1], ldx = X.shape[0]
    cdef Py_ssize_t bw = max(panel_rows, n)
    cdef Py_ssize_t L = bw + n
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] P = np.zeros((L, n), order="F")
    cdef cnp.ndarray[double, ndim=1] v = np.zeros(L + 1)
    cdef cnp.ndarray[double, ndim=1] w = np.zeros(L + 1)
    cdef double *pp = &P[0, 0]
    cdef double *vp = &v[0]
    cdef double *wp = &w[0]
    cdef const double *xp
    cdef Py_ssize_t p, j, rows
    if stop <= start:
        return P[bw:].copy(order="F")
    xp = &X[0, 0]
    with nogil:
        p = start
        while p < stop:
            rows = min(p + panel_rows, stop) - p
            for j in range(n):
                memcpy(&pp[j * L], &xp[p + j * ldx], rows * sizeof(double))
                memset(&pp[j * L + rows], 0, (bw - rows) * sizeof(double))
            _factor_trapezoidal(pp, L, bw, n, vp, wp)
            for j in range(n):
                memcpy(&pp[j * L + bw], &pp[j * L], n * sizeof(double))
            p += panel_rows
    return P[bw:].copy(order="F")


def jacobi_eigh(A_in, double tol, int max_sweeps):
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] A = np.array(A_in, dtype=np.float64, order="F")
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] V = np.eye(n, order="F")
    cdef double *a = &A[0, 0] if n else NULL
    cdef double *vv = &V[0, 0] if n else NULL
    cdef Py_ssize_t p, q, r
    cdef double apq, app, aqq, theta, t, c, s, x, y
    cdef int sweep, rotated = 1
    sweep = 0
    with nogil:
        while sweep < max_sweeps:
            sweep += 1
            rotated = 0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p + q * n]
                    if apq == 0.0:
                        continue
                    app = a[p + p * n]
                    aqq = a[q + q * n]
                    if fabs(apq) <= tol * sqrt(fabs(app * aqq)):
                        continue
                    rotated = 1
                    theta = (aqq - app) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = copysign(1.0, theta) / (fabs(theta) + sqrt(1.0 + theta * theta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for r in range(n):
                        if r == p or r == q:
                            continue
                        x = a[r + p * n]
                        y = a[r + q * n]
                        a[r + p * n] = c * x - s * y
                        a[r + q * n] = s * x + c * y
                        a[p + r * n] = a[r + p * n]
                        a[q + r * n] = a[r + q * n]
                    a[p + p * n] = app - t * apq
                    a[q + q * n] = aqq + t * apq
                    a[p + q * n] = 0.0
                    a[q + p * n] = 0.0
                    for r in range(n):
                        x = vv[r + p * n]
                        y = vv[r + q * n]
                        vv[r + p * n] = c * x - s * y
                        vv[r + q * n] = s * x + c * y
            if not rotated:
                break
    if rotated:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return np.diag(A).copy(), V, sweep
