"""Dense 3-way tensor kernels: unfolding, mode products, Khatri-Rao, CP.

Layout convention
-----------------
A 3-way tensor is a C-contiguous float64 ndarray of shape ``(I, P, L)``
(frequency bin, frame within fold, fold).  Entry ``(i, p, l)`` lives at
flat offset ``(i * P + p) * L + l``; this is also the order used by the
binary tensor file format.

The mode-n unfolding maps entry ``(i1, i2, i3)`` to row ``i_n`` and
0-based column ``sum_{k != n} i_k * prod_{m < k, m != n} I_m``, i.e. the
first non-n index varies fastest along columns.  Concretely:

* mode 1: shape ``(I, P*L)``, column ``p + l*P``
* mode 2: shape ``(P, I*L)``, column ``i + l*I``
* mode 3: shape ``(L, I*P)``, column ``i + p*I``

With this convention the mode-1 unfolding of a rank-J CP model with
factors ``W (I x J)``, ``H (P x J)``, ``V (L x J)`` equals
``W @ khatri_rao(V, H).T``, and cyclically for the other modes.
"""

from __future__ import annotations

import numpy as np

TENSOR_FILE_MAGIC = b"VFT3"

_MODES = (1, 2, 3)


def _check_mode(mode: int) -> None:
    if mode not in _MODES:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def _as_tensor(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-way array, got ndim={t.ndim}")
    return t


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-n unfolding of a 3-way tensor into a matrix.

    Returns a C-contiguous ``(I_n, prod of other dims)`` matrix whose
    column order follows the convention in the module docstring.
    """
    _check_mode(mode)
    t = _as_tensor(t)
    m = np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1, order="F")
    return np.ascontiguousarray(m)


def fold(m: np.ndarray, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the 3-way tensor from a mode-n unfolding."""
    _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise ValueError(f"dims must be three positive extents, got {dims!r}")
    rest = [d for k, d in enumerate(dims, start=1) if k != mode]
    expected = (dims[mode - 1], rest[0] * rest[1])
    if m.shape != expected:
        raise ValueError(
            f"shape mismatch: mode-{mode} unfolding of dims {dims} is "
            f"{expected}, got {m.shape}"
        )
    t = np.moveaxis(m.reshape([dims[mode - 1]] + rest, order="F"), 0, mode - 1)
    return np.ascontiguousarray(t)


def mode_n_product(t: np.ndarray, u: np.ndarray, mode: int) -> np.ndarray:
    """Contract matrix ``u`` with the tensor along ``mode``.

    ``u`` must have as many columns as the tensor's extent along ``mode``;
    the output extent along that mode equals ``u``'s row count.
    """
    _check_mode(mode)
    t = _as_tensor(t)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={u.ndim}")
    if u.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"dimension mismatch: u has {u.shape[1]} columns but mode-{mode} "
            f"extent is {t.shape[mode - 1]}"
        )
    z = np.tensordot(u, t, axes=(1, mode - 1))
    return np.ascontiguousarray(np.moveaxis(z, 0, mode - 1))


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts.

    Output row ``i*b.rows + k`` holds ``a[i, j] * b[k, j]`` in column ``j``
    (rows of ``a`` vary slowest).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"column-count mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    return np.ascontiguousarray(
        (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])
    )


def cp_reconstruct(w: np.ndarray, h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dense tensor of the rank-J CP model ``q_ipl = sum_j w_ij h_pj v_lj``."""
    w = np.asarray(w, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if w.ndim != 2 or h.ndim != 2 or v.ndim != 2:
        raise ValueError("cp_reconstruct expects three matrices")
    if not (w.shape[1] == h.shape[1] == v.shape[1]):
        raise ValueError(
            "rank mismatch: factor column counts are "
            f"{w.shape[1]}, {h.shape[1]}, {v.shape[1]}"
        )
    m1 = w @ khatri_rao(v, h).T
    return fold(m1, 1, (w.shape[0], h.shape[0], v.shape[0]))


def write_tensor(path, t: np.ndarray) -> None:
    """Write a 3-way tensor to the little-endian binary tensor file.

    Format: 4 magic bytes ``VFT3``, three uint64 extents ``(I, P, L)``,
    then ``I*P*L`` float64 values in the module's linearization order.
    """
    t = _as_tensor(t)
    with open(path, "wb") as fh:
        fh.write(TENSOR_FILE_MAGIC)
        fh.write(np.asarray(t.shape, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a tensor written by :func:`write_tensor`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != TENSOR_FILE_MAGIC:
            raise ValueError(f"not a tensor file (bad magic {magic!r})")
        dims = np.frombuffer(fh.read(24), dtype="<u8")
        if dims.size != 3 or np.any(dims == 0):
            raise ValueError(f"corrupt tensor header: dims {dims!r}")
        count = int(dims.prod())
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if data.size != count:
            raise ValueError(
                f"corrupt tensor file: expected {count} values, got {data.size}"
            )
    return data.reshape(tuple(int(d) for d in dims)).astype(np.float64)


def write_matrix_csv(path, m: np.ndarray) -> None:
    """Write a matrix as CSV with a header row of 0-based column indices."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    header = ",".join(str(j) for j in range(m.shape[1]))
    np.savetxt(path, m, delimiter=",", header=header, comments="", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix_csv`."""
    m = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    return m
