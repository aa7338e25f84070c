"""Convolution kernels and backend selection.

Tensors are channels-last (NHWC); weights are (kh, kw, c_in, c_out).
Convolution is im2col + GEMM; the im2col gather and col2im scatter-add are
the memory-bound hot kernels with two interchangeable implementations:

* ``cython`` -- compiled OpenMP loops (gelpress.net._kernels_cy), built by
  setup.py when a C compiler is available;
* ``python`` -- pure numpy slice copies (gelpress.net._kernels_py).

The backend is chosen at import time: the GELPRESS_KERNELS environment
variable may force ``cython`` or ``python``; the default ``auto`` prefers the
compiled extension and silently falls back to numpy. Within one backend,
results are bit-identical across runs and thread counts (each batch element
is written by exactly one thread in a fixed order).
``benchmarks/bench_kernels.py`` compares throughput.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError, DomainError
from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_BACKENDS = {"python": _kernels_py}
if _kernels_cy is not None:
    _BACKENDS["cython"] = _kernels_cy


def resolve_backend(name: str) -> str:
    name = (name or "auto").lower()
    if name == "auto":
        return "cython" if "cython" in _BACKENDS else "python"
    if name not in ("python", "cython"):
        raise ConfigError(f"unknown kernel backend {name!r} (use auto|python|cython)")
    if name not in _BACKENDS:
        raise ConfigError("cython kernels requested but the extension is not built")
    return name


_active = resolve_backend(os.environ.get("GELPRESS_KERNELS", "auto"))


def use_backend(name: str) -> str:
    """Switch the hot-kernel backend; returns the previously active name."""
    global _active
    previous = _active
    _active = resolve_backend(name)
    return previous


def backend_name() -> str:
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def blas_limit() -> int | None:
    """BLAS thread cap that cooperates best with the active backend: the
    compiled kernels keep every core busy in their OpenMP regions, so BLAS
    runs single-threaded next to them; the numpy backend leaves BLAS free."""
    return 1 if _active == "cython" else None


# --- convolution ---------------------------------------------------------------


def _check_conv(x, w):
    if x.ndim != 4 or w.ndim != 4:
        raise DomainError("conv expects NHWC input and (kh, kw, c_in, c_out) weights")
    if x.shape[3] != w.shape[2]:
        raise DomainError(f"channel mismatch: input {x.shape[3]} vs weights {w.shape[2]}")


def _pad_input(x, kh, kw, pad):
    ph, pw = (pad, pad) if np.isscalar(pad) else (int(pad[0]), int(pad[1]))
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0))) if ph or pw else x
    if xp.shape[1] < kh or xp.shape[2] < kw:
        raise DomainError("kernel larger than padded input")
    return xp, ph, pw


def conv2d_forward(x, w, b, stride: int = 1, pad=0, return_cols: bool = False):
    """Cross-correlation. Optionally returns the im2col matrix so the backward
    pass can reuse it."""
    _check_conv(x, w)
    kh, kw, _, co = w.shape
    xp, _, _ = _pad_input(x, kh, kw, pad)
    cols = _BACKENDS[_active].im2col(xp, kh, kw, stride)
    y = cols @ w.reshape(-1, co)
    if b is not None:
        y += b
    n = x.shape[0]
    ho = (xp.shape[1] - kh) // stride + 1
    wo = (xp.shape[2] - kw) // stride + 1
    out = y.reshape(n, ho, wo, co)
    return (out, cols) if return_cols else out


def conv2d_backward(x, w, dy, stride: int = 1, pad=0, need_dx: bool = True, cols=None):
    """Gradients w.r.t. input, weights and bias for conv2d_forward.

    ``cols`` may pass the forward's im2col matrix to skip regathering;
    ``need_dx=False`` skips the input gradient (first layer).
    """
    _check_conv(x, w)
    kh, kw, ci, co = w.shape
    xp, ph, pw = _pad_input(x, kh, kw, pad)
    dy_flat = dy.reshape(-1, co)
    db = dy_flat.sum(axis=0)
    if cols is None:
        cols = _BACKENDS[_active].im2col(xp, kh, kw, stride)
    dw = (cols.T @ dy_flat).reshape(w.shape)
    if not need_dx:
        return None, dw, db
    dcols = dy_flat @ w.reshape(-1, co).T
    dxp = _BACKENDS[_active].col2im(dcols, xp.shape, kh, kw, stride)
    n, h, win, _ = x.shape
    dx = dxp[:, ph : ph + h, pw : pw + win, :]
    return np.ascontiguousarray(dx), dw, db


# --- pooling (shared numpy implementations, NHWC) -------------------------------


def maxpool2d_forward(x: np.ndarray):
    """2x2 max pooling with stride 2; odd trailing rows/cols are dropped.
    Returns the pooled map and the winner masks needed for backward (ties go
    to the first window element in row-major order)."""
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    if ho == 0 or wo == 0:
        raise DomainError(f"input {h}x{w} too small for 2x2 pooling")
    xs = x[:, : ho * 2, : wo * 2, :]
    s = [xs[:, i::2, j::2, :] for i in (0, 1) for j in (0, 1)]
    out = np.maximum(np.maximum(s[0], s[1]), np.maximum(s[2], s[3]))
    masks = []
    taken = np.zeros(out.shape, dtype=bool)
    for sk in s:
        m = (sk == out) & ~taken
        taken |= m
        masks.append(m)
    return out, masks


def maxpool2d_backward(dy: np.ndarray, masks, x_shape) -> np.ndarray:
    n, h, w, c = x_shape
    ho, wo = h // 2, w // 2
    dx = np.zeros(x_shape, dtype=dy.dtype)
    for (i, j), m in zip(((0, 0), (0, 1), (1, 0), (1, 1)), masks):
        dx[:, i : ho * 2 : 2, j : wo * 2 : 2, :] += dy * m
    return dx


def block_mean(x: np.ndarray, k: int) -> np.ndarray:
    """k x k block averaging over the spatial axes of an NHWC tensor."""
    if k == 1:
        return x
    n, h, w, c = x.shape
    ho, wo = h // k, w // k
    return x[:, : ho * k, : wo * k, :].reshape(n, ho, k, wo, k, c).mean(axis=(2, 4))
