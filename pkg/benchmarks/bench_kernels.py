"""Micro-benchmark: numba kernels vs the pure-numpy/python fallback.

Run: python benchmarks/bench_kernels.py [--size 512] [--repeats 5]

Times the hot kernels under both backends and prints the speedup. The two
backends produce bit-identical outputs (asserted here as well); the numba
path is selected by default, the fallback via BVC_PURE_NUMPY=1.
"""

import argparse
import time

import numpy as np

from bvc import kernels


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_warp(size, repeats):
    rng = np.random.default_rng(0)
    src = rng.uniform(size=(size, size, 3))
    flow = rng.uniform(-8, 8, size=(size, size, 2))
    out_nb = np.empty_like(src)
    out_np = np.empty_like(src)
    kernels._warp_nb(src, flow, out_nb)  # compile
    t_nb, _ = timeit(lambda: kernels._warp_nb(src, flow, out_nb), repeats)
    t_np, _ = timeit(lambda: kernels._warp_np(src, flow, out_np), repeats)
    assert np.array_equal(out_nb, out_np)
    return "bilinear warp", t_nb, t_np


def bench_trilinear(size, repeats):
    rng = np.random.default_rng(1)
    stack = rng.uniform(size=(5, size, size, 3))
    flow = rng.uniform(-6, 6, size=(size, size, 2))
    scale = rng.uniform(0, 4, size=(size, size))
    out_nb = np.empty((size, size, 3))
    out_np = np.empty((size, size, 3))
    kernels._sswarp_nb(stack, flow, scale, out_nb)
    t_nb, _ = timeit(lambda: kernels._sswarp_nb(stack, flow, scale, out_nb), repeats)
    t_np, _ = timeit(lambda: kernels._sswarp_np(stack, flow, scale, out_np), repeats)
    assert np.array_equal(out_nb, out_np)
    return "blur-stack warp", t_nb, t_np


def bench_block_search(size, repeats):
    rng = np.random.default_rng(2)
    tgt = rng.integers(0, 1 << 20, size=(size, size)).astype(np.int64)
    ref = rng.integers(0, 1 << 20, size=(size, size)).astype(np.int64)
    by, bx = size // 8, size // 8
    base = np.zeros((by, bx, 2), dtype=np.int64)
    out_nb = np.empty((by, bx, 2), dtype=np.int64)
    out_np = np.empty((by, bx, 2), dtype=np.int64)
    kernels._block_search_nb(tgt, ref, base, 4, 8, out_nb, 4, 1000)
    t_nb, _ = timeit(lambda: kernels._block_search_nb(tgt, ref, base, 4, 8, out_nb, 4, 1000), repeats)
    t_np, _ = timeit(lambda: kernels._block_search_np(tgt, ref, base, 4, 8, out_np, 4, 1000), repeats)
    assert np.array_equal(out_nb, out_np)
    return "block SAD search", t_nb, t_np


def bench_range_coder(size, repeats):
    rng = np.random.default_rng(3)
    n = size * size // 4
    mu = rng.normal(0, 3, n)
    sig = np.abs(rng.normal(1.5, 1.0, n)) + 0.11
    syms = np.rint(rng.normal(mu, sig)).astype(np.int64)
    zmin, zmax = int(syms.min()), int(syms.max())
    buf = np.empty(n * 10 + 32, np.uint8)
    dec = np.empty(n, np.int64)
    n_bytes = kernels.coder_nb.rc_encode_gauss(syms, mu, sig, zmin, zmax, buf)

    def enc_nb():
        return kernels.coder_nb.rc_encode_gauss(syms, mu, sig, zmin, zmax, buf)

    def enc_py():
        return kernels.coder_py.rc_encode_gauss(syms, mu, sig, zmin, zmax, buf)

    t_enc_nb, _ = timeit(enc_nb, repeats)
    t_enc_py, _ = timeit(enc_py, max(1, repeats // 2))
    kernels.coder_nb.rc_decode_gauss(buf[:n_bytes], mu, sig, zmin, zmax, n, dec)
    t_dec_nb, _ = timeit(lambda: kernels.coder_nb.rc_decode_gauss(buf[:n_bytes], mu, sig, zmin, zmax, n, dec), repeats)
    t_dec_py, _ = timeit(
        lambda: kernels.coder_py.rc_decode_gauss(buf[:n_bytes], mu, sig, zmin, zmax, n, dec),
        1,
    )
    assert np.array_equal(dec, syms)
    return [("range encode (gaussian)", t_enc_nb, t_enc_py), ("range decode (gaussian)", t_dec_nb, t_dec_py)]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = [
        bench_warp(args.size, args.repeats),
        bench_trilinear(args.size, args.repeats),
        bench_block_search(args.size, args.repeats),
    ]
    rows.extend(bench_range_coder(args.size, args.repeats))

    print(f"\nkernel benchmarks at {args.size}x{args.size} (best of {args.repeats}):")
    print(f"{'kernel':<26} {'numba':>10} {'fallback':>10} {'speedup':>9}")
    for name, t_nb, t_py in rows:
        print(f"{name:<26} {t_nb * 1e3:>8.2f}ms {t_py * 1e3:>8.2f}ms {t_py / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
