"""Kernel backend selection.

The compiled extension ``vibfact._kernels`` is preferred when it was
built; otherwise the numpy implementation is used.  Set the environment
variable ``VIBFACT_KERNELS`` to ``cython`` or ``numpy`` to force a
backend (``cython`` raises if the extension is unavailable).
"""

from __future__ import annotations

import os

from . import _kernels_np

_requested = os.environ.get("VIBFACT_KERNELS", "auto")
if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(
        f"VIBFACT_KERNELS must be 'auto', 'cython' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_np
        BACKEND = "numpy"

mu_numden = _impl.mu_numden
fit_stats = _impl.fit_stats
pairwise_divergence = _impl.pairwise_divergence
