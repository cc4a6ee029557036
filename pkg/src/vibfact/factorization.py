"""NMF and NTF under the beta-divergence with multiplicative updates.

Both solvers minimize the beta-divergence between a non-negative
observation and a low-rank non-negative model, sweeping the factors in a
fixed order and rebuilding the model before each factor's update.  Each
factor update multiplies the factor elementwise by the ratio of the two
gradient components

    num = (ym * q^(beta-1)) @ b      den = q^beta @ b

where ``ym`` is the observation unfolding for that factor, ``b`` the
Khatri-Rao companion of the remaining factors, and ``q = a @ b.T`` the
current model unfolding (floored at ``epsilon``).  Supported cost
functions: beta 1 (squared Euclidean), 0 (generalized Kullback-Leibler)
and -1 (Itakura-Saito).

Stopping follows the drop of the normalized Frobenius residual
``||Y - Q||_F / ||Y||_F`` between consecutive iterations, regardless of
the cost function being minimized: iteration stops once the residual
decreases by less than ``tol``.  An iteration whose residual grows (which
the KL/IS updates permit, since they minimize a different objective) is
not a drop and does not trigger the stop; ``tol=0`` disables early
stopping altogether.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .simulate import make_rng
from .tensor_core import khatri_rao, unfold

BETA_ALIASES = {"eu": 1.0, "kl": 0.0, "is": -1.0}
BETA_NAMES = {1.0: "eu", 0.0: "kl", -1.0: "is"}


class NumericalError(RuntimeError):
    """A factor became non-finite during iteration."""


def parse_beta(value) -> float:
    """Map 'eu'/'kl'/'is' (or a numeric value) to the beta parameter."""
    if isinstance(value, str):
        try:
            return BETA_ALIASES[value.lower()]
        except KeyError:
            raise ValueError(
                f"unknown cost function {value!r}; expected one of "
                f"{sorted(BETA_ALIASES)}"
            ) from None
    return float(value)


@dataclass(frozen=True)
class FitOptions:
    """Solver settings shared by :func:`nmf` and :func:`ntf`."""

    rank: int = 2
    beta: float = 1.0
    max_iters: int = 100
    tol: float = 1e-5
    epsilon: float = 1e-12
    rng_seed: int = 0
    record_history: bool = True

    def validate(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.beta not in (1.0, 0.0, -1.0):
            raise ValueError(
                f"beta must be 1 (eu), 0 (kl) or -1 (is), got {self.beta}"
            )


@dataclass
class FactorSet:
    """Fit result: non-negative factors plus convergence history.

    ``v`` is None for NMF.  ``objective`` holds the per-iteration
    beta-divergence, ``residual`` the per-iteration normalized Frobenius
    residual; both are empty when history recording is off.
    """

    w: np.ndarray
    h: np.ndarray
    v: np.ndarray | None
    objective: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    beta: float = 1.0
    rank: int = 2


def beta_divergence(y: np.ndarray, q: np.ndarray, beta: float, epsilon: float = 1e-12) -> float:
    """Beta-divergence D(y || q) between same-shape non-negative arrays.

    Accepts any beta > 0 plus the 0 and -1 special cases; ``q`` entries
    (and ``y`` entries inside logarithms) are floored at ``epsilon`` for
    beta <= 0.
    """
    y = np.asarray(y, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if y.shape != q.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {q.shape}")
    if beta <= 0.0 and beta not in (0.0, -1.0):
        raise ValueError(f"beta must be positive, 0 or -1, got {beta}")
    return float(kernels.pairwise_divergence(y.ravel(), q.ravel(), beta, epsilon))


def _uniform_open(rng: np.random.Generator, shape) -> np.ndarray:
    # i.i.d. uniform on (0, 1]: strictly positive start avoids zero-locking
    return 1.0 - rng.random(shape)


def _mu_factor(ym, a, b, beta, eps):
    """One multiplicative update of factor ``a`` against unfolding ``ym``.

    Returns the updated factor and the update numerator (reused by the
    Euclidean residual shortcut).
    """
    if beta == 1.0:
        # Euclidean case: den = a (b^T b) avoids materializing the model
        num = ym @ b
        den = a @ (b.T @ b)
    else:
        num, den = kernels.mu_numden(ym, a, b, beta, eps)
    return a * (num / np.maximum(den, eps)), num


def _check_finite(*factors) -> None:
    for f in factors:
        if not np.all(np.isfinite(f)):
            raise NumericalError("factor became non-finite during iteration")


def _euclidean_stats(ynorm_sq, a, b, num):
    """(divergence, residual_sq) for beta=1 from Gram matrices only.

    ``num`` must equal ``ym @ b`` for the current ``b``; valid for any
    column rescaling of the factors that leaves the model unchanged.
    """
    cross = float(np.sum(a * num))
    qq = float(np.sum((a.T @ a) * (b.T @ b)))
    res_sq = max(ynorm_sq - 2.0 * cross + qq, 0.0)
    return 0.5 * res_sq, res_sq


def nmf(y: np.ndarray, opts: FitOptions, init=None) -> FactorSet:
    """Factorize a non-negative matrix as ``Y ~ W H^T``.

    ``W`` holds frequency profiles (rows of Y), ``H`` time profiles
    (columns of Y).  ``init`` optionally supplies ``(W0, H0)``.
    """
    opts.validate()
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={y.ndim}")
    _validate_observation(y)
    n_rows, n_cols = y.shape
    rng = make_rng(opts.rng_seed)
    if init is None:
        w = _uniform_open(rng, (n_rows, opts.rank))
        h = _uniform_open(rng, (n_cols, opts.rank))
    else:
        w, h = (np.array(m, dtype=np.float64) for m in init)
    yt = np.ascontiguousarray(y.T)
    ynorm = float(np.linalg.norm(y))
    eps, beta = opts.epsilon, opts.beta

    fit = FactorSet(w=w, h=h, v=None, beta=beta, rank=opts.rank)
    prev_res = None
    for it in range(1, opts.max_iters + 1):
        w, _ = _mu_factor(y, w, h, beta, eps)
        h, num_h = _mu_factor(yt, h, w, beta, eps)
        _check_finite(w, h)
        if beta == 1.0:
            # num_h = y.T @ w is valid for the final factors of this sweep
            div, res_sq = _euclidean_stats(ynorm**2, h, w, num_h)
        else:
            div, res_sq = kernels.fit_stats(
                y, w, h, beta, eps, want_objective=opts.record_history
            )
        res = float(np.sqrt(res_sq)) / ynorm
        if opts.record_history:
            fit.objective.append(float(div))
            fit.residual.append(res)
        fit.iterations = it
        if prev_res is not None and 0.0 <= prev_res - res < opts.tol:
            fit.converged = True
            break
        prev_res = res
    fit.w, fit.h = w, h
    return fit


def ntf(y: np.ndarray, opts: FitOptions, init=None, update_v: bool = True) -> FactorSet:
    """Rank-J CP factorization of a non-negative 3-way tensor.

    Factors are swept in the order W, H, V with the model rebuilt before
    each update; after every full sweep the columns of W and H are scaled
    to unit l2 norm with the scale absorbed into V.  ``init`` optionally
    supplies ``(W0, H0, V0)``.  With ``update_v=False`` the V update is
    skipped and V keeps its initial value (no normalization either, so a
    frozen V is left untouched).
    """
    opts.validate()
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 3:
        raise ValueError(f"expected a 3-way array, got ndim={y.ndim}")
    _validate_observation(y)
    n_i, n_p, n_l = y.shape
    rng = make_rng(opts.rng_seed)
    if init is None:
        w = _uniform_open(rng, (n_i, opts.rank))
        h = _uniform_open(rng, (n_p, opts.rank))
        v = _uniform_open(rng, (n_l, opts.rank))
    else:
        w, h, v = (np.array(m, dtype=np.float64) for m in init)
    y1, y2, y3 = unfold(y, 1), unfold(y, 2), unfold(y, 3)
    ynorm = float(np.linalg.norm(y1))
    eps, beta = opts.epsilon, opts.beta

    fit = FactorSet(w=w, h=h, v=v, beta=beta, rank=opts.rank)
    prev_res = None
    for it in range(1, opts.max_iters + 1):
        w, _ = _mu_factor(y1, w, khatri_rao(v, h), beta, eps)
        h, _ = _mu_factor(y2, h, khatri_rao(v, w), beta, eps)
        cross = None
        if update_v:
            v, num_v = _mu_factor(y3, v, khatri_rao(h, w), beta, eps)
            if beta == 1.0:
                # <Q, Y> from the V-update numerator; unchanged by the
                # column rescaling below since the scales cancel in Q
                cross = float(np.sum(v * num_v))
            w, h, v = _normalize_columns(w, h, v)
        _check_finite(w, h, v)
        if beta == 1.0:
            if cross is None:
                b1 = khatri_rao(v, h)
                cross = float(np.sum(w * (y1 @ b1)))
            qq = float(np.sum((w.T @ w) * (h.T @ h) * (v.T @ v)))
            res_sq = max(ynorm**2 - 2.0 * cross + qq, 0.0)
            div = 0.5 * res_sq
        else:
            div, res_sq = kernels.fit_stats(
                y1, w, khatri_rao(v, h), beta, eps,
                want_objective=opts.record_history,
            )
        res = float(np.sqrt(res_sq)) / ynorm
        if opts.record_history:
            fit.objective.append(float(div))
            fit.residual.append(res)
        fit.iterations = it
        if prev_res is not None and 0.0 <= prev_res - res < opts.tol:
            fit.converged = True
            break
        prev_res = res
    fit.w, fit.h, fit.v = w, h, v
    return fit


def _validate_observation(y: np.ndarray) -> None:
    if not np.all(np.isfinite(y)):
        raise ValueError("observation contains non-finite values")
    if np.any(y < 0):
        raise ValueError("observation must be non-negative")
    if not np.any(y > 0):
        raise ValueError("observation is all zero")


def _normalize_columns(w, h, v):
    """Scale W and H columns to unit l2 norm, pushing the scale into V.

    Zero columns are left untouched.  The CP model is unchanged.
    """
    nw = np.linalg.norm(w, axis=0)
    nh = np.linalg.norm(h, axis=0)
    sw = np.where(nw > 0, nw, 1.0)
    sh = np.where(nh > 0, nh, 1.0)
    return w / sw, h / sh, v * (sw * sh)


def normalize_factors(fit: FactorSet) -> FactorSet:
    """Return a copy of an NTF factor set with unit-norm W and H columns.

    The reconstruction is unchanged; the removed scales multiply V.
    """
    if fit.v is None:
        raise ValueError("normalize_factors requires an NTF factor set (v is None)")
    w, h, v = _normalize_columns(fit.w.copy(), fit.h.copy(), fit.v.copy())
    return FactorSet(
        w=w, h=h, v=v,
        objective=list(fit.objective), residual=list(fit.residual),
        converged=fit.converged, iterations=fit.iterations,
        beta=fit.beta, rank=fit.rank,
    )


def ntf_gradients(y, w, h, v, beta, epsilon: float = 1e-12):
    """Gradients of the beta-divergence w.r.t. W, H and V at the given factors.

    Each gradient is ``den - num`` of the corresponding multiplicative
    update, i.e. ``(q^beta - ym * q^(beta-1)) @ companion`` on the matching
    unfolding.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    grads = []
    for mode, (a, b) in enumerate(
        [(w, khatri_rao(v, h)), (h, khatri_rao(v, w)), (v, khatri_rao(h, w))],
        start=1,
    ):
        num, den = kernels.mu_numden(
            unfold(y, mode), np.ascontiguousarray(a, dtype=np.float64),
            b, beta, epsilon,
        )
        grads.append(den - num)
    return tuple(grads)


def ntf_gradients_euclidean(y, w, h, v):
    """Euclidean-case gradients in their Gram/slice form.

    Uses the weight matrix ``V^T V`` (and its analogues) for the model
    part and per-slice sums of the observation against column-scaled
    factors for the data part; equal to :func:`ntf_gradients` at beta=1.
    """
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    sv = v.T @ v
    gw = w @ (sv * (h.T @ h)) - sum(
        y[:, :, fold] @ (h * v[fold]) for fold in range(v.shape[0])
    )
    gh = h @ (sv * (w.T @ w)) - sum(
        y[:, :, fold].T @ (w * v[fold]) for fold in range(v.shape[0])
    )
    gv = v @ ((h.T @ h) * (w.T @ w)) - unfold(y, 3) @ khatri_rao(h, w)
    return gw, gh, gv
