# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for beta-divergence multiplicative updates.

Same contract as ``vibfact._kernels_np``.  The model unfolding
``q = a @ b.T`` is reconstructed row by row on the fly instead of being
materialized, so each call streams once over ``ym``.  Rows are processed
in parallel; every per-row accumulation is sequential in the column
index, which keeps results bit-identical for any thread count.

Rank-2 variants keep the factor row in registers; rank 2 is the default
decomposition rank, so the generic loops are a cold path.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport log, pow

cnp.import_array()


cdef inline int _branch(double beta) noexcept nogil:
    if beta == 1.0:
        return 0
    if beta == 0.0:
        return 1
    if beta == -1.0:
        return 2
    return 3


cdef void _row_numden(const double* yrow, const double* arow, const double* b,
                      Py_ssize_t cols, Py_ssize_t rank, int kind, double beta,
                      double eps, double* num, double* den) noexcept nogil:
    cdef Py_ssize_t c, j
    cdef double q, y, z, qb
    cdef const double* brow
    for c in range(cols):
        brow = b + c * rank
        q = 0.0
        for j in range(rank):
            q = q + arow[j] * brow[j]
        if q < eps:
            q = eps
        y = yrow[c]
        if kind == 0:
            z = y
            qb = q
        elif kind == 1:
            z = y / q
            qb = 1.0
        elif kind == 2:
            qb = 1.0 / q
            z = y * qb * qb
        else:
            qb = pow(q, beta)
            z = y * pow(q, beta - 1.0)
        for j in range(rank):
            num[j] = num[j] + z * brow[j]
            den[j] = den[j] + qb * brow[j]


cdef void _row_num_kl2(const double* yrow, const double* arow, const double* b,
                       Py_ssize_t cols, double eps, double* num) noexcept nogil:
    # KL numerator only; the denominator is the companion column sum
    cdef Py_ssize_t c
    cdef double a0 = arow[0]
    cdef double a1 = arow[1]
    cdef double n0 = 0.0
    cdef double n1 = 0.0
    cdef double q, z, b0, b1
    for c in range(cols):
        b0 = b[2 * c]
        b1 = b[2 * c + 1]
        q = a0 * b0 + a1 * b1
        if q < eps:
            q = eps
        z = yrow[c] / q
        n0 = n0 + z * b0
        n1 = n1 + z * b1
    num[0] = n0
    num[1] = n1


cdef void _row_numden_is2(const double* yrow, const double* arow, const double* b,
                          Py_ssize_t cols, double eps, double* num,
                          double* den) noexcept nogil:
    cdef Py_ssize_t c
    cdef double a0 = arow[0]
    cdef double a1 = arow[1]
    cdef double n0 = 0.0
    cdef double n1 = 0.0
    cdef double d0 = 0.0
    cdef double d1 = 0.0
    cdef double q, qi, z, b0, b1
    for c in range(cols):
        b0 = b[2 * c]
        b1 = b[2 * c + 1]
        q = a0 * b0 + a1 * b1
        if q < eps:
            q = eps
        qi = 1.0 / q
        z = yrow[c] * qi * qi
        n0 = n0 + z * b0
        n1 = n1 + z * b1
        d0 = d0 + qi * b0
        d1 = d1 + qi * b1
    num[0] = n0
    num[1] = n1
    den[0] = d0
    den[1] = d1


cdef void _row_stats(const double* yrow, const double* arow, const double* b,
                     Py_ssize_t cols, Py_ssize_t rank, int kind, double beta,
                     double eps, int want_obj, double* out) noexcept nogil:
    cdef Py_ssize_t c, j
    cdef double q, y, d, ys, yb, qb
    cdef double div = 0.0
    cdef double res = 0.0
    cdef const double* brow
    for c in range(cols):
        brow = b + c * rank
        q = 0.0
        for j in range(rank):
            q = q + arow[j] * brow[j]
        if q < eps:
            q = eps
        y = yrow[c]
        d = y - q
        res = res + d * d
        if want_obj == 0:
            continue
        if kind == 0:
            div = div + 0.5 * d * d
        elif kind == 1:
            if y > 0.0:
                div = div + y * log(y / q)
            div = div + q - y
        elif kind == 2:
            ys = y if y > eps else eps
            div = div + log(q / ys) + ys / q - 1.0
        else:
            yb = pow(y, beta)
            qb = pow(q, beta)
            div = div + y * (yb - qb) / beta - (yb * y - qb * q) / (beta + 1.0)
    out[0] = div
    out[1] = res


def mu_numden(double[:, ::1] ym, double[:, ::1] a, double[:, ::1] b,
              double beta, double eps):
    """Numerator/denominator of the multiplicative update for factor ``a``.

    ``num = (ym * q^(beta-1)) @ b`` and ``den = q^beta @ b`` with
    ``q = max(a @ b.T, eps)``.
    """
    cdef Py_ssize_t rows = ym.shape[0]
    cdef Py_ssize_t cols = ym.shape[1]
    cdef Py_ssize_t rank = a.shape[1]
    if a.shape[0] != rows or b.shape[0] != cols or b.shape[1] != rank:
        raise ValueError(
            f"inconsistent shapes: ym ({rows}, {cols}), "
            f"a ({a.shape[0]}, {a.shape[1]}), b ({b.shape[0]}, {b.shape[1]})"
        )
    cdef int kind = _branch(beta)
    cdef Py_ssize_t r
    num_arr = np.zeros((rows, rank), dtype=np.float64)
    cdef double[:, ::1] num = num_arr
    cdef double[:, ::1] den
    if kind == 1:
        if rank == 2:
            for r in prange(rows, nogil=True, schedule="static"):
                _row_num_kl2(&ym[r, 0], &a[r, 0], &b[0, 0], cols, eps, &num[r, 0])
        else:
            den_scratch = np.zeros((rows, rank), dtype=np.float64)
            den = den_scratch
            for r in prange(rows, nogil=True, schedule="static"):
                _row_numden(&ym[r, 0], &a[r, 0], &b[0, 0], cols, rank, kind,
                            beta, eps, &num[r, 0], &den[r, 0])
        den_arr = np.broadcast_to(np.asarray(b).sum(axis=0), (rows, rank)).copy()
        return num_arr, den_arr
    den_arr = np.zeros((rows, rank), dtype=np.float64)
    den = den_arr
    if kind == 2 and rank == 2:
        for r in prange(rows, nogil=True, schedule="static"):
            _row_numden_is2(&ym[r, 0], &a[r, 0], &b[0, 0], cols, eps,
                            &num[r, 0], &den[r, 0])
    else:
        for r in prange(rows, nogil=True, schedule="static"):
            _row_numden(&ym[r, 0], &a[r, 0], &b[0, 0], cols, rank, kind, beta,
                        eps, &num[r, 0], &den[r, 0])
    return num_arr, den_arr


def fit_stats(double[:, ::1] ym, double[:, ::1] a, double[:, ::1] b,
              double beta, double eps, bint want_objective=True):
    """Beta-divergence and squared Frobenius residual of the model ``a @ b.T``.

    With ``want_objective=False`` the divergence is skipped (returned as
    nan) and only the residual is computed.
    """
    cdef Py_ssize_t rows = ym.shape[0]
    cdef Py_ssize_t cols = ym.shape[1]
    cdef Py_ssize_t rank = a.shape[1]
    if a.shape[0] != rows or b.shape[0] != cols or b.shape[1] != rank:
        raise ValueError(
            f"inconsistent shapes: ym ({rows}, {cols}), "
            f"a ({a.shape[0]}, {a.shape[1]}), b ({b.shape[0]}, {b.shape[1]})"
        )
    partial_arr = np.zeros((rows, 2), dtype=np.float64)
    cdef double[:, ::1] partial = partial_arr
    cdef int kind = _branch(beta)
    cdef int want = 1 if want_objective else 0
    cdef Py_ssize_t r
    for r in prange(rows, nogil=True, schedule="static"):
        _row_stats(&ym[r, 0], &a[r, 0], &b[0, 0], cols, rank, kind, beta,
                   eps, want, &partial[r, 0])
    # fixed-order reduction over row partials keeps the result deterministic
    totals = partial_arr.sum(axis=0)
    return (float(totals[0]) if want_objective else float("nan")), float(totals[1])


def pairwise_divergence(y, q, double beta, double eps):
    """Beta-divergence between two same-shape non-negative arrays."""
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    q_arr = np.ascontiguousarray(q, dtype=np.float64)
    if y_arr.shape != q_arr.shape:
        raise ValueError(f"shape mismatch: {y_arr.shape} vs {q_arr.shape}")
    if beta <= 0.0 and beta != -1.0 and beta != 0.0:
        raise ValueError(f"beta must be positive, 0 or -1, got {beta!r}")
    cdef double[::1] yv = y_arr.ravel()
    cdef double[::1] qv = q_arr.ravel()
    cdef Py_ssize_t n = yv.shape[0]
    cdef int kind = _branch(beta)
    cdef Py_ssize_t k
    cdef double div = 0.0
    cdef double yk, qk, d, ys, yb, qb
    with nogil:
        for k in range(n):
            yk = yv[k]
            qk = qv[k]
            if (kind == 1 or kind == 2) and qk < eps:
                qk = eps
            if kind == 0:
                d = yk - qk
                div += 0.5 * d * d
            elif kind == 1:
                if yk > 0.0:
                    div += yk * log(yk / qk)
                div += qk - yk
            elif kind == 2:
                ys = yk if yk > eps else eps
                div += log(qk / ys) + ys / qk - 1.0
            else:
                yb = pow(yk, beta)
                qb = pow(qk, beta)
                div += yk * (yb - qb) / beta - (yb * yk - qb * qk) / (beta + 1.0)
    return div
