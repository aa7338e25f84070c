#!/usr/bin/env python3
"""Throughput comparison of the convolution hot-kernel backends.

Runs the forward and backward convolution of every encoder layer at training
batch size through both the compiled (Cython/OpenMP) and pure-numpy
implementations, plus one full training step of the hardness model.

Usage: python benchmarks/bench_kernels.py [--batch 16] [--reps 10]
"""

import argparse
import time

import numpy as np
from threadpoolctl import threadpool_limits

from gelpress.net import kernels
from gelpress.net.model import HardnessNet, NetConfig


def timeit(fn, reps):
    fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def layer_shapes(batch, cfg: NetConfig):
    h, w = 90 // cfg.input_downsample, 120 // cfg.input_downsample
    c_in = 3
    for c_out in cfg.conv_channels:
        yield batch * 5, h, w, c_in, c_out
        h, w, c_in = h // 2, w // 2, c_out


def bench_conv(batch, reps, cfg):
    rng = np.random.default_rng(0)
    rows = []
    for n, h, w, ci, co in layer_shapes(batch, cfg):
        x = rng.normal(size=(n, h, w, ci))
        wt = rng.normal(size=(3, 3, ci, co))
        b = np.zeros(co)
        dy = rng.normal(size=(n, h, w, co))
        flops = 2 * n * h * w * ci * co * 9
        row = {"shape": f"{ci:>3d}->{co:<3d} {h:>2d}x{w:<3d}", "flops": flops}
        for backend in kernels.available_backends():
            kernels.use_backend(backend)
            with threadpool_limits(limits=kernels.blas_limit(), user_api="blas"):
                tf = timeit(lambda: kernels.conv2d_forward(x, wt, b, 1, 1), reps)
                tb = timeit(lambda: kernels.conv2d_backward(x, wt, dy, 1, 1, ci != 3), reps)
            row[backend] = (tf, tb)
        rows.append(row)
    return rows


def bench_step(batch, reps, cfg):
    rng = np.random.default_rng(1)
    clips = rng.normal(0, 0.2, size=(batch, 5, 90, 120, 3))
    labels = rng.uniform(10, 80, batch)
    out = {}
    for backend in kernels.available_backends():
        kernels.use_backend(backend)
        model = HardnessNet(cfg, seed=0)
        with threadpool_limits(limits=kernels.blas_limit(), user_api="blas"):
            out[backend] = timeit(lambda: model.loss_and_grads(clips, labels), reps)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--reps", type=int, default=10)
    args = parser.parse_args()

    cfg = NetConfig()
    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled extension not built; benchmarking the numpy fallback only")

    print(f"\nper-layer convolution, batch {args.batch} ({args.batch * 5} frames):")
    header = f"{'layer':>16s}" + "".join(f"{b + ' fwd/bwd (ms)':>28s}" for b in backends)
    print(header)
    for row in bench_conv(args.batch, args.reps, cfg):
        cells = ""
        for b in backends:
            tf, tb = row[b]
            gf = row["flops"] / tf / 1e9
            cells += f"{1e3 * tf:10.1f} /{1e3 * tb:8.1f} ({gf:4.1f}GF)"
        print(f"{row['shape']:>16s}{cells}")

    print("\nfull training step (forward + backward + loss):")
    for backend, dt in bench_step(args.batch, max(3, args.reps // 2), cfg).items():
        print(f"  {backend:8s} {1e3 * dt:8.1f} ms/step")
    kernels.use_backend("auto")


if __name__ == "__main__":
    main()
