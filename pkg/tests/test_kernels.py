"""Backend consistency: the numba fast path and the numpy/python fallback
must produce bit-identical results, or a bitstream written under one backend
would not decode under the other."""

import numpy as np
import pytest
from scipy.special import ndtr as scipy_ndtr

from bvc import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


class TestScalarMath:
    def test_exp_matches_numpy_closely(self):
        xs = np.random.default_rng(0).uniform(-700, 40, 20_000)
        mine = np.array([kernels.coder_py.expd(float(x)) for x in xs])
        ref = np.exp(xs)
        ok = ref > 0
        rel = np.abs(mine[ok] - ref[ok]) / ref[ok]
        assert rel.max() < 1e-13

    def test_ndtr_matches_scipy_closely(self):
        xs = np.random.default_rng(1).uniform(-12, 12, 20_000)
        mine = np.array([kernels.coder_py.ndtr(float(x)) for x in xs])
        assert np.abs(mine - scipy_ndtr(xs)).max() < 5e-14

    def test_ndtr_saturation(self):
        assert kernels.coder_py.ndtr(45.0) == 1.0
        assert kernels.coder_py.ndtr(-45.0) == 0.0

    @needs_numba
    def test_scalar_chain_bitwise_equal_across_backends(self):
        xs = np.random.default_rng(2).uniform(-40, 40, 50_000)
        for x in xs[:5_000]:
            assert kernels.coder_nb.ndtr(float(x)) == kernels.coder_py.ndtr(float(x))

    def test_gauss_cum_monotone_and_bounded(self):
        mu, sig = 1.7, 3.1
        zmin, zmax = -50, 60
        tw = kernels.GAUSS_TOTAL - (zmax - zmin + 1)
        lo = kernels.coder_py.ndtr((zmin - 0.5 - mu) / sig)
        hi = kernels.coder_py.ndtr((zmax + 0.5 - mu) / sig)
        prev = kernels.coder_py.gauss_cum(zmin, mu, sig, lo, hi, zmin, zmax, tw)
        assert prev == 0
        for z in range(zmin + 1, zmax + 2):
            cur = kernels.coder_py.gauss_cum(z, mu, sig, lo, hi, zmin, zmax, tw)
            assert cur > prev  # every bin keeps the 2^-32 floor
            prev = cur
        assert prev == kernels.GAUSS_TOTAL


@needs_numba
class TestCrossBackendBitEquality:
    def test_warp(self):
        rng = np.random.default_rng(3)
        src = rng.uniform(size=(37, 53, 3))
        flow = rng.uniform(-6, 6, size=(37, 53, 2))
        out_nb = np.empty_like(src)
        out_np = np.empty_like(src)
        kernels._warp_nb(src, flow, out_nb)
        kernels._warp_np(src, flow, out_np)
        assert np.array_equal(out_nb, out_np)

    def test_trilinear_warp(self):
        rng = np.random.default_rng(4)
        stack = rng.uniform(size=(4, 33, 41, 3))
        flow = rng.uniform(-4, 4, size=(33, 41, 2))
        scale = rng.uniform(-0.5, 4.5, size=(33, 41))
        out_nb = np.empty((33, 41, 3))
        out_np = np.empty((33, 41, 3))
        c_nb = kernels._sswarp_nb(stack, flow, scale, out_nb)
        c_np = kernels._sswarp_np(stack, flow, scale, out_np)
        assert np.array_equal(out_nb, out_np)
        assert int(c_nb) == int(c_np)

    @pytest.mark.parametrize("min_overlap,zero_bias", [(0, 0), (4, 0), (0, 5000), (4, 5000)])
    def test_block_search(self, min_overlap, zero_bias):
        rng = np.random.default_rng(5)
        tgt = rng.integers(0, 1 << 20, size=(48, 64)).astype(np.int64)
        ref = rng.integers(0, 1 << 20, size=(48, 64)).astype(np.int64)
        base = rng.integers(-3, 4, size=(6, 8, 2)).astype(np.int64)
        out_nb = np.empty((6, 8, 2), dtype=np.int64)
        out_np = np.empty((6, 8, 2), dtype=np.int64)
        kernels._block_search_nb(tgt, ref, base, 4, 8, out_nb, min_overlap, zero_bias)
        kernels._block_search_np(tgt, ref, base, 4, 8, out_np, min_overlap, zero_bias)
        assert np.array_equal(out_nb, out_np)

    def test_range_coder_static(self):
        rng = np.random.default_rng(6)
        syms = rng.integers(0, 37, size=5_000).astype(np.int64)
        freqs = np.bincount(syms, minlength=37).astype(np.int64) + 1
        cum = np.zeros(38, dtype=np.int64)
        np.cumsum(freqs, out=cum[1:])
        out_a = np.empty(syms.size * 10 + 32, np.uint8)
        out_b = np.empty(syms.size * 10 + 32, np.uint8)
        n_a = kernels.coder_nb.rc_encode_static(syms, cum, out_a)
        n_b = kernels.coder_py.rc_encode_static(syms, cum, out_b)
        assert n_a == n_b and np.array_equal(out_a[:n_a], out_b[:n_b])
        dec_a = np.empty(syms.size, np.int64)
        dec_b = np.empty(syms.size, np.int64)
        kernels.coder_nb.rc_decode_static(out_a[:n_a], cum, syms.size, dec_a)
        kernels.coder_py.rc_decode_static(out_b[:n_b], cum, syms.size, dec_b)
        assert np.array_equal(dec_a, syms) and np.array_equal(dec_b, syms)

    def test_range_coder_gaussian_cross_decode(self):
        rng = np.random.default_rng(7)
        n = 5_000
        mu = rng.normal(0, 4, n)
        sig = np.abs(rng.normal(1, 2, n)) + 0.11
        syms = np.rint(rng.normal(mu, sig)).astype(np.int64)
        zmin, zmax = int(syms.min()), int(syms.max())
        out = np.empty(n * 10 + 32, np.uint8)
        n_bytes = kernels.coder_nb.rc_encode_gauss(syms, mu, sig, zmin, zmax, out)
        out_py = np.empty(n * 10 + 32, np.uint8)
        n_py = kernels.coder_py.rc_encode_gauss(syms, mu, sig, zmin, zmax, out_py)
        assert n_bytes == n_py and np.array_equal(out[:n_bytes], out_py[:n_py])
        # encode with one backend, decode with the other
        dec = np.empty(n, np.int64)
        kernels.coder_py.rc_decode_gauss(out[:n_bytes], mu, sig, zmin, zmax, n, dec)
        assert np.array_equal(dec, syms)
        dec2 = np.empty(n, np.int64)
        kernels.coder_nb.rc_decode_gauss(out_py[:n_py], mu, sig, zmin, zmax, n, dec2)
        assert np.array_equal(dec2, syms)


class TestThreads:
    def test_set_threads_no_crash(self):
        kernels.set_threads(2)
        kernels.set_threads(1)

    def test_backend_name(self):
        assert kernels.backend_name() in ("numba", "numpy")
