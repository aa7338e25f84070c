"""Pure-numpy data-movement kernels (im2col gather / col2im scatter-add).

Layout is channels-last (NHWC); a column row holds the receptive field in
(kh, kw, c) order with channels fastest, so gathering is slice copies. The
surrounding convolution math (GEMM) lives in gelpress.net.kernels and is
shared with the compiled backend.
"""

from __future__ import annotations

import numpy as np


def im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, Hp, Wp, C) padded input -> (N*Ho*Wo, kh*kw*C) columns."""
    n, hp, wp, c = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    cols = np.empty((n, ho, wo, kh, kw, c), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[
                :, i : i + ho * stride : stride, j : j + wo * stride : stride, :
            ]
    return cols.reshape(n * ho * wo, kh * kw * c)


def col2im(dcols: np.ndarray, xp_shape, kh: int, kw: int, stride: int) -> np.ndarray:
    """Scatter-add of column gradients back onto the padded input grid."""
    n, hp, wp, c = xp_shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    dxp = np.zeros(xp_shape, dtype=dcols.dtype)
    d6 = dcols.reshape(n, ho, wo, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + ho * stride : stride, j : j + wo * stride : stride, :] += d6[
                :, :, :, i, j, :
            ]
    return dxp
