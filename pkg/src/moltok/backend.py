"""Scatter-add backend selection: compiled kernels with a numpy fallback.

The Cython extension is optional; when it is missing (or MOLTOK_NO_EXT is
set) the same operations run through ``np.add.at``, which also accumulates
sequentially in index order, so results are bit-identical either way.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_FALLBACK = os.environ.get("MOLTOK_NO_EXT", "") not in ("", "0")

_kernels = None
if not _FORCE_FALLBACK:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        _kernels = None

BACKEND = "cython" if _kernels is not None else "numpy"


def _kernel_ready(*arrays: np.ndarray) -> bool:
    return _kernels is not None and all(
        a.flags["C_CONTIGUOUS"] and a.dtype in (np.float32, np.float64)
        for a in arrays
    )


def scatter_add_rows(out: np.ndarray, index: np.ndarray, rows: np.ndarray) -> None:
    """out[index[k], :] += rows[k, :] for k in order; in place."""
    if index.size == 0:
        return
    index = np.ascontiguousarray(index, dtype=np.int64)
    if _kernel_ready(out, rows) and out.dtype == rows.dtype:
        _kernels.scatter_add_rows(out, index, rows)
    else:
        np.add.at(out, index, rows)


def edge_message_sum(
    h: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    erow: np.ndarray,
    n_out: int,
) -> np.ndarray:
    """Rows ``out[v] = sum over edges k with dst[k]=v of h[src[k]] + erow[k]``."""
    out = np.zeros((n_out, h.shape[1]), dtype=h.dtype)
    if src.size == 0:
        return out
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    if _kernel_ready(out, h, erow) and h.dtype == erow.dtype == out.dtype:
        _kernels.edge_message_sum(out, h, src, dst, erow)
    else:
        np.add.at(out, dst, h[src] + erow)
    return out
