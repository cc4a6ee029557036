"""Kernel backend tests: dense oracles and compiled/numpy parity."""

import numpy as np
import pytest

from vibfact import _kernels_np
from vibfact import kernels

try:
    from vibfact import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_kernels_np] + ([_kernels] if _kernels is not None else [])
BETAS = (1.0, 0.0, -1.0, 0.5)


def dense_reference(ym, a, b, beta, eps):
    """Materialized-model oracle for the update numerator/denominator."""
    q = np.maximum(a @ b.T, eps)
    num = (ym * q ** (beta - 1.0)) @ b
    den = (q**beta) @ b
    return num, den


def divergence_reference(y, q, beta, eps):
    if beta == 1.0:
        return 0.5 * np.sum((y - q) ** 2)
    if beta == 0.0:
        terms = np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0) / q), 0.0)
        return np.sum(terms - y + q)
    if beta == -1.0:
        ys = np.maximum(y, eps)
        return np.sum(np.log(q / ys) + ys / q - 1.0)
    return np.sum(y * (y**beta - q**beta) / beta
                  - (y ** (beta + 1) - q ** (beta + 1)) / (beta + 1))


def random_problem(rng, rows=9, cols=17, rank=2):
    ym = np.ascontiguousarray(rng.random((rows, cols)) + 0.05)
    a = np.ascontiguousarray(rng.random((rows, rank)) + 0.05)
    b = np.ascontiguousarray(rng.random((cols, rank)) + 0.05)
    return ym, a, b


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
class TestAgainstDenseOracle:
    @pytest.mark.parametrize("beta", BETAS)
    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_mu_numden(self, impl, beta, rank):
        rng = np.random.default_rng(int(10 * beta) + rank)
        ym, a, b = random_problem(rng, rank=rank)
        num, den = impl.mu_numden(ym, a, b, beta, 1e-12)
        ref_num, ref_den = dense_reference(ym, a, b, beta, 1e-12)
        np.testing.assert_allclose(num, ref_num, rtol=1e-12)
        np.testing.assert_allclose(den, ref_den, rtol=1e-12)

    @pytest.mark.parametrize("beta", BETAS)
    def test_fit_stats(self, impl, beta):
        rng = np.random.default_rng(3)
        ym, a, b = random_problem(rng)
        div, res_sq = impl.fit_stats(ym, a, b, beta, 1e-12)
        q = np.maximum(a @ b.T, 1e-12)
        np.testing.assert_allclose(div, divergence_reference(ym, q, beta, 1e-12), rtol=1e-12)
        np.testing.assert_allclose(res_sq, np.sum((ym - q) ** 2), rtol=1e-12)

    def test_fit_stats_residual_only(self, impl):
        rng = np.random.default_rng(4)
        ym, a, b = random_problem(rng)
        div, res_sq = impl.fit_stats(ym, a, b, 0.0, 1e-12, False)
        assert np.isnan(div)
        _, ref = impl.fit_stats(ym, a, b, 0.0, 1e-12, True)
        assert res_sq == ref

    @pytest.mark.parametrize("beta", BETAS)
    def test_pairwise_divergence(self, impl, beta):
        rng = np.random.default_rng(5)
        y = rng.random(200) + 0.05
        q = rng.random(200) + 0.05
        np.testing.assert_allclose(
            impl.pairwise_divergence(y, q, beta, 1e-12),
            divergence_reference(y, q, beta, 1e-12),
            rtol=1e-12,
        )

    def test_model_flooring(self, impl):
        """A zero factor row floors the model at eps (no division blowup)."""
        ym = np.ones((2, 3))
        a = np.array([[0.0, 0.0], [1.0, 1.0]])
        b = np.ones((3, 2))
        num, den = impl.mu_numden(ym, a, b, -1.0, 1e-12)
        assert np.all(np.isfinite(num)) and np.all(np.isfinite(den))
        np.testing.assert_allclose(num[0], 3.0 / 1e-24, rtol=1e-9)

    def test_shape_mismatch_rejected(self, impl):
        with pytest.raises(ValueError):
            impl.mu_numden(np.ones((2, 3)), np.ones((2, 2)), np.ones((4, 2)), 1.0, 1e-12)
        with pytest.raises(ValueError):
            impl.pairwise_divergence(np.ones(3), np.ones(4), 1.0, 1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
class TestBackendParity:
    """Both backends agree to floating-point reassociation tolerance."""

    @pytest.mark.parametrize("beta", BETAS)
    @pytest.mark.parametrize("rank", [1, 2, 3])
    def test_mu_numden_parity(self, beta, rank):
        rng = np.random.default_rng(7)
        ym, a, b = random_problem(rng, rows=23, cols=41, rank=rank)
        n1, d1 = _kernels.mu_numden(ym, a, b, beta, 1e-12)
        n2, d2 = _kernels_np.mu_numden(ym, a, b, beta, 1e-12)
        np.testing.assert_allclose(n1, n2, rtol=1e-12)
        np.testing.assert_allclose(d1, d2, rtol=1e-12)

    @pytest.mark.parametrize("beta", BETAS)
    def test_fit_stats_parity(self, beta):
        rng = np.random.default_rng(8)
        ym, a, b = random_problem(rng, rows=23, cols=41)
        np.testing.assert_allclose(
            _kernels.fit_stats(ym, a, b, beta, 1e-12),
            _kernels_np.fit_stats(ym, a, b, beta, 1e-12),
            rtol=1e-12,
        )

    def test_selected_backend_exposed(self):
        assert kernels.BACKEND in ("cython", "numpy")
        assert callable(kernels.mu_numden)
