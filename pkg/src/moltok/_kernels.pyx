# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-scatter kernels for the encoder's aggregation loop.

Both kernels accumulate strictly in edge order, matching the numpy
fallback (np.add.at) element for element, so the two backends produce
bit-identical results.
"""

cimport cython

ctypedef fused real:
    float
    double


@cython.boundscheck(False)
@cython.wraparound(False)
def scatter_add_rows(real[:, ::1] out, const long long[::1] index, real[:, ::1] rows):
    """out[index[k], :] += rows[k, :], sequentially in k."""
    cdef Py_ssize_t k, j
    cdef Py_ssize_t m = index.shape[0]
    cdef Py_ssize_t d = out.shape[1]
    for k in range(m):
        for j in range(d):
            out[index[k], j] += rows[k, j]


@cython.boundscheck(False)
@cython.wraparound(False)
def edge_message_sum(
    real[:, ::1] out,
    real[:, ::1] h,
    const long long[::1] src,
    const long long[::1] dst,
    real[:, ::1] erow,
):
    """out[dst[k], :] += h[src[k], :] + erow[k, :], sequentially in k."""
    cdef Py_ssize_t k, j
    cdef Py_ssize_t m = src.shape[0]
    cdef Py_ssize_t d = h.shape[1]
    for k in range(m):
        for j in range(d):
            out[dst[k], j] += h[src[k], j] + erow[k, j]
