"""Tensor kernel tests against brute-force index-map oracles."""

import numpy as np
import pytest

from vibfact.tensor_core import (
    cp_reconstruct,
    fold,
    khatri_rao,
    mode_n_product,
    read_matrix_csv,
    read_tensor,
    unfold,
    write_matrix_csv,
    write_tensor,
)


def unfold_reference(t, mode):
    """Brute-force unfolding: explicit loops over the column index map."""
    dims = t.shape
    rest = [d for k, d in enumerate(dims) if k != mode - 1]
    out = np.zeros((dims[mode - 1], rest[0] * rest[1]))
    for i1 in range(dims[0]):
        for i2 in range(dims[1]):
            for i3 in range(dims[2]):
                idx = (i1, i2, i3)
                col, mult = 0, 1
                for k in range(3):
                    if k == mode - 1:
                        continue
                    col += idx[k] * mult
                    mult *= dims[k]
                out[idx[mode - 1], col] = t[i1, i2, i3]
    return out


class TestUnfoldFold:
    def test_unfold_matches_index_map_oracle(self):
        rng = np.random.default_rng(0)
        t = rng.random((3, 4, 5))
        for mode in (1, 2, 3):
            np.testing.assert_array_equal(unfold(t, mode), unfold_reference(t, mode))

    def test_mode1_unfolding_of_counting_tensor(self):
        """2x2x2 tensor filled 1..8 in (i1, i2, i3) enumeration order."""
        t = np.arange(1.0, 9.0).reshape(2, 2, 2)
        expected = np.array([[1.0, 3.0, 2.0, 4.0], [5.0, 7.0, 6.0, 8.0]])
        np.testing.assert_array_equal(unfold(t, 1), expected)

    def test_singleton_tensor_every_mode(self):
        t = np.full((1, 1, 1), 7.5)
        for mode in (1, 2, 3):
            np.testing.assert_array_equal(unfold(t, mode), [[7.5]])

    def test_unfold_shapes(self):
        t = np.zeros((3, 4, 5))
        assert unfold(t, 1).shape == (3, 20)
        assert unfold(t, 2).shape == (4, 15)
        assert unfold(t, 3).shape == (5, 12)

    def test_round_trip_random_dims(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            dims = tuple(rng.integers(1, 9, size=3))
            t = rng.random(dims)
            for mode in (1, 2, 3):
                np.testing.assert_array_equal(fold(unfold(t, mode), mode, dims), t)

    def test_fold_of_counting_matrix(self):
        m = np.array([[1.0, 3.0, 2.0, 4.0], [5.0, 7.0, 6.0, 8.0]])
        np.testing.assert_array_equal(fold(m, 1, (2, 2, 2)), np.arange(1.0, 9.0).reshape(2, 2, 2))

    def test_fold_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            fold(np.zeros((3, 5)), 1, (2, 2, 2))

    def test_invalid_mode(self):
        with pytest.raises(ValueError, match="mode"):
            unfold(np.zeros((2, 2, 2)), 4)


class TestModeProduct:
    def test_identity_matrix_is_identity_map(self):
        rng = np.random.default_rng(2)
        t = rng.random((4, 3, 5))
        for mode, n in ((1, 4), (2, 3), (3, 5)):
            np.testing.assert_allclose(mode_n_product(t, np.eye(n), mode), t, atol=0)

    def test_ones_contraction(self):
        t = np.ones((2, 2, 2))
        z = mode_n_product(t, np.array([[1.0, 1.0]]), 1)
        np.testing.assert_array_equal(z, np.full((1, 2, 2), 2.0))

    def test_contraction_against_einsum(self):
        rng = np.random.default_rng(3)
        t = rng.random((4, 3, 5))
        u = rng.random((6, 3))
        np.testing.assert_allclose(
            mode_n_product(t, u, 2), np.einsum("ipl,jp->ijl", t, u), atol=1e-14
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            mode_n_product(np.zeros((2, 4, 2)), np.zeros((3, 5)), 2)


class TestKhatriRao:
    def test_hand_expanded_columns(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        out = khatri_rao(a, b)
        np.testing.assert_array_equal(out[:, 0], [1, 0, 1, 3, 0, 3])
        np.testing.assert_array_equal(out[:, 1], [0, 2, 2, 0, 4, 4])

    def test_kronecker_identity_per_column(self):
        rng = np.random.default_rng(4)
        a, b = rng.random((4, 3)), rng.random((5, 3))
        out = khatri_rao(a, b)
        assert out.shape == (20, 3)
        for j in range(3):
            np.testing.assert_allclose(out[:, j], np.kron(a[:, j], b[:, j]), atol=0)

    def test_zero_column_propagates(self):
        a = np.array([[0.0, 1.0], [0.0, 2.0]])
        b = np.ones((3, 2))
        assert not khatri_rao(a, b)[:, 0].any()

    def test_column_count_mismatch(self):
        with pytest.raises(ValueError, match="column-count mismatch"):
            khatri_rao(np.zeros((2, 2)), np.zeros((2, 3)))


class TestCpReconstruct:
    def test_rank_one_all_ones(self):
        one = np.ones((3, 1))
        np.testing.assert_array_equal(
            cp_reconstruct(one, np.ones((2, 1)), np.ones((4, 1))), np.ones((3, 2, 4))
        )

    def test_unfoldings_match_khatri_rao_products(self):
        rng = np.random.default_rng(5)
        w, h, v = rng.random((4, 2)), rng.random((3, 2)), rng.random((5, 2))
        q = cp_reconstruct(w, h, v)
        np.testing.assert_allclose(unfold(q, 1), w @ khatri_rao(v, h).T, atol=1e-12)
        np.testing.assert_allclose(unfold(q, 2), h @ khatri_rao(v, w).T, atol=1e-12)
        np.testing.assert_allclose(unfold(q, 3), v @ khatri_rao(h, w).T, atol=1e-12)

    def test_small_integer_factors_against_triple_sum(self):
        w = np.array([[1.0, 2.0], [0.0, 1.0], [3.0, 1.0]])
        h = np.array([[2.0, 0.0], [1.0, 1.0]])
        v = np.array([[1.0, 1.0], [0.0, 2.0]])
        q = cp_reconstruct(w, h, v)
        ref = np.zeros((3, 2, 2))
        for i in range(3):
            for p in range(2):
                for li in range(2):
                    for j in range(2):
                        ref[i, p, li] += w[i, j] * h[p, j] * v[li, j]
        np.testing.assert_array_equal(q, ref)

    def test_rank_mismatch(self):
        with pytest.raises(ValueError, match="rank mismatch"):
            cp_reconstruct(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))


class TestFileFormats:
    def test_tensor_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        t = rng.random((3, 5, 2))
        path = tmp_path / "t.vft"
        write_tensor(path, t)
        np.testing.assert_array_equal(read_tensor(path), t)

    def test_tensor_file_layout(self, tmp_path):
        """Header is magic + little-endian uint64 dims; data is C order."""
        t = np.arange(8.0).reshape(2, 2, 2)
        path = tmp_path / "t.vft"
        write_tensor(path, t)
        raw = path.read_bytes()
        assert raw[:4] == b"VFT3"
        np.testing.assert_array_equal(
            np.frombuffer(raw[4:28], dtype="<u8"), [2, 2, 2]
        )
        np.testing.assert_array_equal(
            np.frombuffer(raw[28:], dtype="<f8"), np.arange(8.0)
        )

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.vft"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            read_tensor(path)

    def test_truncated_file_rejected(self, tmp_path):
        t = np.ones((2, 2, 2))
        path = tmp_path / "t.vft"
        write_tensor(path, t)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="corrupt"):
            read_tensor(path)

    def test_matrix_csv_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        m = rng.random((4, 3)) * 1e-7
        path = tmp_path / "m.csv"
        write_matrix_csv(path, m)
        assert path.read_text().splitlines()[0] == "0,1,2"
        np.testing.assert_array_equal(read_matrix_csv(path), m)
