"""Pure-numpy kernels for beta-divergence multiplicative updates.

Fallback backend with the same contract as the compiled extension
``vibfact._kernels``.  Every routine works on a mode unfolding
``ym (R x C)`` paired with the factor being updated ``a (R x J)`` and its
Khatri-Rao companion ``b (C x J)``; the model unfolding ``q = a @ b.T``
is floored at ``eps`` before any division or negative power.
"""

from __future__ import annotations

import numpy as np


def _check(ym, a, b):
    if ym.shape != (a.shape[0], b.shape[0]) or a.shape[1] != b.shape[1]:
        raise ValueError(
            f"inconsistent shapes: ym {ym.shape}, a {a.shape}, b {b.shape}"
        )


def mu_numden(ym, a, b, beta, eps):
    """Numerator/denominator of the multiplicative update for factor ``a``.

    Returns ``(num, den)`` with ``num = (ym * q^(beta-1)) @ b`` and
    ``den = q^beta @ b`` where ``q = max(a @ b.T, eps)``.
    """
    ym = np.ascontiguousarray(ym, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    _check(ym, a, b)
    q = a @ b.T
    np.maximum(q, eps, out=q)
    if beta == 1.0:
        num = ym @ b
        den = q @ b
    elif beta == 0.0:
        num = (ym / q) @ b
        den = np.broadcast_to(b.sum(axis=0), num.shape).copy()
    elif beta == -1.0:
        qi = 1.0 / q
        num = (ym * qi * qi) @ b
        den = qi @ b
    else:
        num = (ym * q ** (beta - 1.0)) @ b
        den = (q**beta) @ b
    return num, den


def fit_stats(ym, a, b, beta, eps, want_objective=True):
    """Beta-divergence and squared Frobenius residual of the model ``a @ b.T``.

    Returns ``(divergence, residual_sq)`` against ``ym``; for ``beta <= 0``
    both ``q`` and, inside logarithms, ``ym`` are floored at ``eps``.
    With ``want_objective=False`` the divergence is skipped (nan).
    """
    ym = np.ascontiguousarray(ym, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    _check(ym, a, b)
    q = a @ b.T
    np.maximum(q, eps, out=q)
    d = ym - q
    res_sq = float(np.vdot(d, d))
    if not want_objective:
        return float("nan"), res_sq
    return _divergence(ym, q, beta, eps), res_sq


def pairwise_divergence(y, q, beta, eps):
    """Beta-divergence between two same-shape non-negative arrays.

    ``q`` (and ``y`` inside logarithms) is floored at ``eps`` for
    ``beta <= 0``.
    """
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if y.shape != q.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {q.shape}")
    if beta <= 0.0:
        q = np.maximum(q, eps)
    return _divergence(y, q, beta, eps)


def _divergence(y, q, beta, eps):
    if beta == 1.0:
        d = y - q
        return 0.5 * float(np.vdot(d, d))
    if beta == 0.0:
        pos = y > 0.0
        entropy = float(np.sum(y[pos] * np.log(y[pos] / q[pos])))
        return entropy + float(np.sum(q - y))
    if beta == -1.0:
        ys = np.maximum(y, eps)
        return float(np.sum(np.log(q / ys) + ys / q - 1.0))
    if beta > 0.0:
        yb = y**beta
        qb = q**beta
        return float(
            np.sum(
                y * (yb - qb) / beta
                - (yb * y - qb * q) / (beta + 1.0)
            )
        )
    raise ValueError(f"beta must be positive, 0 or -1, got {beta!r}")
