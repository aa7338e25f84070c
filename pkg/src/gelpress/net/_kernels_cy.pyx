# Compiled data-movement kernels: im2col gather and col2im scatter-add over
# channels-last tensors. OpenMP parallelizes over the batch; each image is
# touched by exactly one thread in a fixed order, so results are bit-identical
# for any thread count. The channel axis is innermost and contiguous, which
# turns the inner loops into straight memory copies.

import numpy as np

cimport cython
from cython.parallel cimport prange


def im2col(xp, int kh, int kw, int stride):
    xp = np.ascontiguousarray(xp, dtype=np.float64)
    n, hp, wp, c = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    cols = np.empty((n * ho * wo, kh * kw * c), dtype=np.float64)
    _gather(xp, cols, kh, kw, stride, ho, wo)
    return cols


def col2im(dcols, xp_shape, int kh, int kw, int stride):
    n, hp, wp, c = xp_shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    dcols = np.ascontiguousarray(dcols, dtype=np.float64)
    dxp = np.zeros(xp_shape, dtype=np.float64)
    _scatter(dcols, dxp, kh, kw, stride, ho, wo)
    return dxp


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _gather(double[:, :, :, ::1] xp, double[:, ::1] cols,
                  int kh, int kw, int stride, Py_ssize_t ho, Py_ssize_t wo) noexcept nogil:
    cdef Py_ssize_t N = xp.shape[0], C = xp.shape[3]
    cdef Py_ssize_t n, i, j, p, q, r, base, c
    for n in prange(N, schedule='static'):
        for i in range(ho):
            for j in range(wo):
                r = (n * ho + i) * wo + j
                base = 0
                for p in range(kh):
                    for q in range(kw):
                        for c in range(C):
                            cols[r, base + c] = xp[n, i * stride + p, j * stride + q, c]
                        base = base + C


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _scatter(double[:, ::1] dcols, double[:, :, :, ::1] dxp,
                   int kh, int kw, int stride, Py_ssize_t ho, Py_ssize_t wo) noexcept nogil:
    cdef Py_ssize_t N = dxp.shape[0], C = dxp.shape[3]
    cdef Py_ssize_t n, i, j, p, q, r, base, c
    for n in prange(N, schedule='static'):
        for i in range(ho):
            for j in range(wo):
                r = (n * ho + i) * wo + j
                base = 0
                for p in range(kh):
                    for q in range(kw):
                        for c in range(C):
                            dxp[n, i * stride + p, j * stride + q, c] += dcols[r, base + c]
                        base = base + C
