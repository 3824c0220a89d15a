"""Hot numeric kernels with a numba fast path and a pure-numpy/python fallback.

Backend selection: numba is used when importable unless the environment
variable ``BVC_PURE_NUMPY=1`` forces the fallback. Both backends are written
to produce bit-identical results so that a bitstream encoded under one
backend decodes under the other:

* array kernels (bilinear warp, blur-stack warp, block search) mirror each
  other's floating-point expression order exactly;
* the range coder is integer-only (56-bit state, 32-bit renormalisation,
  carry-less byte emission via interval clamping);
* the Gaussian coding CDF is evaluated with a self-contained exp/erf chain
  built from primitive IEEE operations (ported from the classic fdlibm and
  Cephes routines) instead of libm/scipy, whose results vary per library.

The self-contained scalar chain is written once and instantiated twice: with
``numba.njit`` for the fast path and as plain Python for the fallback.
"""

from __future__ import annotations

import os

import numpy as np

PURE_NUMPY = os.environ.get("BVC_PURE_NUMPY", "0").lower() in ("1", "true", "yes")

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]

    prange = range

USE_NUMBA = HAVE_NUMBA and not PURE_NUMPY

# Range-coder geometry: 56-bit low/range held in 64-bit integers, byte-wise
# renormalisation with the carry-less interval clamp, 32-bit frequency
# precision (BOT), 3-byte flush / 7-byte decoder preload.
RC_STATE_BITS = 56
RC_TOP = 1 << 48
RC_BOT = 1 << 32
RC_MAX = (1 << 56) - 1
GAUSS_TOTAL = 1 << 32


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_threads(n: int) -> None:
    """Cap worker threads used by the numba backend. No-op on the fallback."""
    if USE_NUMBA:
        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(max(1, min(int(n), limit)))


# ---------------------------------------------------------------------------
# Scalar math + range coder, instantiated once per backend
# ---------------------------------------------------------------------------


def _build_coder(jit):
    """Build the scalar math chain and range-coder entry points.

    ``jit`` is either ``numba.njit`` or an identity decorator; the function
    bodies are identical, which is what guarantees bit-equal output between
    the two backends.
    """

    TOP = RC_TOP
    TOPM = RC_TOP - 1
    BOT = RC_BOT
    RMAX = RC_MAX
    TOTAL_G = GAUSS_TOTAL

    @jit
    def _expd(x):
        # exp(x) in double precision via argument reduction x = k*ln2 + r
        # (fdlibm-style); uses only +,-,*,/ and ldexp so both backends agree.
        if x != x:
            return x
        if x > 709.782712893384:
            return 1.7976931348623157e308 * 2.0
        if x < -745.1332191019412:
            return 0.0
        ax = -x if x < 0.0 else x
        k = 0
        hi = 0.0
        lo = 0.0
        if ax > 0.34657359027997264:
            if ax < 1.0397207708399179:
                if x >= 0.0:
                    hi = x - 6.93147180369123816490e-01
                    lo = 1.90821492927058770002e-10
                    k = 1
                else:
                    hi = x + 6.93147180369123816490e-01
                    lo = -1.90821492927058770002e-10
                    k = -1
            else:
                half = 0.5 if x >= 0.0 else -0.5
                k = int(1.4426950408889634074 * x + half)
                tk = float(k)
                hi = x - tk * 6.93147180369123816490e-01
                lo = tk * 1.90821492927058770002e-10
            x = hi - lo
        elif ax < 3.7252902984619141e-09:
            return 1.0 + x
        t = x * x
        c = x - t * (
            1.66666666666666019037e-01
            + t
            * (
                -2.77777777770155933842e-03
                + t
                * (
                    6.61375632143793436117e-05
                    + t * (-1.65339022054652515390e-06 + t * 4.13813679705723846039e-08)
                )
            )
        )
        if k == 0:
            return 1.0 - (x * c / (c - 2.0) - x)
        y = 1.0 - ((lo - (x * c) / (2.0 - c)) - hi)
        # ldexp is an exact power-of-two scaling on every platform
        if k >= 0:
            return y * (2.0**k) if k < 1023 else y * (2.0**1000) * (2.0 ** (k - 1000))
        return y / (2.0**-k) if k > -1023 else (y / (2.0**1000)) / (2.0 ** (-k - 1000))

    @jit
    def _erf_small(x):
        # Cephes erf rational approximation, valid for |x| <= 1.
        z = x * x
        p = (
            (
                ((9.60497373987051638749 * z + 9.00260197203842689217e1) * z + 2.23200534594684319226e3)
                * z
                + 7.00332514112805075473e3
            )
            * z
            + 5.55923013010394962768e4
        )
        q = (
            (
                (
                    ((z + 3.35617141647503099647e1) * z + 5.21357949780152679795e2) * z
                    + 4.59432382970980127987e3
                )
                * z
                + 2.26290000613890934246e4
            )
            * z
            + 4.92673942608635921086e4
        )
        return x * p / q

    @jit
    def _erfc_pos(x):
        # erfc(x) for x >= 0; Cephes rationals times our own exp(-x*x).
        if x < 1.0:
            return 1.0 - _erf_small(x)
        z = _expd(-x * x)
        if z == 0.0:
            return 0.0
        if x < 8.0:
            p = (
                (
                    (
                        (
                            (
                                (
                                    (2.46196981473530512524e-10 * x + 5.64189564831068821977e-1) * x
                                    + 7.46321056442269912687
                                )
                                * x
                                + 4.86371970985681366614e1
                            )
                            * x
                            + 1.96520832956077098242e2
                        )
                        * x
                        + 5.26445194995477358631e2
                    )
                    * x
                    + 9.34528527171957607540e2
                )
                * x
                + 1.02755188689515710272e3
            ) * x + 5.57535335369399327526e2
            q = (
                (
                    (
                        (
                            (
                                (
                                    ((x + 1.32281951154744992508e1) * x + 8.67072140885989742329e1) * x
                                    + 3.54937778887819891062e2
                                )
                                * x
                                + 9.75708501743205489753e2
                            )
                            * x
                            + 1.82390916687909736289e3
                        )
                        * x
                        + 2.24633760818710981792e3
                    )
                    * x
                    + 1.65666309194161350182e3
                )
                * x
                + 5.57535340817727675546e2
            )
        else:
            p = (
                (
                    ((5.64189583547755073984e-1 * x + 1.27536670759978104416) * x + 5.01905042251180477414)
                    * x
                    + 6.16021097993053585195
                )
                * x
                + 7.40974269950448939160
            ) * x + 2.97886665372100240670
            q = (
                (
                    (
                        ((x + 2.26052863220117276590) * x + 9.39603524938001434673) * x
                        + 1.20489539808096656605e1
                    )
                    * x
                    + 3.20332675697189572860e1
                )
                * x
                + 7.13827547285759569536e1
            ) * x + 1.57449261107098347253e1
        return z * p / q

    @jit
    def _ndtr(a):
        # Standard normal CDF; saturates far tails explicitly.
        if a > 40.0:
            return 1.0
        if a < -40.0:
            return 0.0
        w = a * 0.7071067811865476
        aw = -w if w < 0.0 else w
        if aw < 0.7071067811865476:
            return 0.5 + 0.5 * _erf_small(w)
        y = 0.5 * _erfc_pos(aw)
        if w > 0.0:
            y = 1.0 - y
        return y

    @jit
    def _gauss_cum(z, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw):
        # Quantized cumulative for the windowed Gaussian: each integer bin in
        # [zmin, zmax] receives its share of (TOTAL_G - W) plus exactly 1, so
        # every bin is decodable (the 2^-32 probability floor).
        if z <= zmin:
            return 0
        if z > zmax:
            return tw + (zmax - zmin + 1)
        u = _ndtr((float(z) - 0.5 - mu) / sig)
        den = cdf_hi - cdf_lo
        if den > 0.0:
            rel = (u - cdf_lo) / den
            if rel < 0.0:
                rel = 0.0
            elif rel > 1.0:
                rel = 1.0
        else:
            rel = float(z - zmin) / float(zmax - zmin + 1)
        return int(rel * float(tw) + 0.5) + (z - zmin)

    @jit
    def _renorm_emit(low, rng, out, n):
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            out[n] = (low >> 48) & 0xFF
            n += 1
            low = (low & TOPM) << 8
            rng = rng << 8
        return low, rng, n

    @jit
    def _renorm_read(low, rng, code, ptr, data):
        nd = len(data)
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (-low) & (BOT - 1)
            else:
                break
            b = int(data[ptr]) if ptr < nd else 0
            code = ((code & TOPM) << 8) | b
            ptr += 1
            low = (low & TOPM) << 8
            rng = rng << 8
        return low, rng, code, ptr

    @jit
    def _flush(low, out, n):
        # Any value in [low, low+range) decodes correctly; range >= BOT here,
        # so the smallest multiple of BOT at or above low needs 3 bytes only.
        v = ((low + BOT - 1) // BOT) * BOT
        out[n] = (v >> 48) & 0xFF
        out[n + 1] = (v >> 40) & 0xFF
        out[n + 2] = (v >> 32) & 0xFF
        return n + 3

    @jit
    def _preload(data):
        code = 0
        ptr = 0
        nd = len(data)
        for _ in range(7):
            b = int(data[ptr]) if ptr < nd else 0
            code = (code << 8) | b
            ptr += 1
        return code, ptr

    @jit
    def rc_encode_static(idx, cum, out):
        total = int(cum[len(cum) - 1])
        low = 0
        rng = RMAX
        n = 0
        for i in range(len(idx)):
            s = int(idx[i])
            clo = int(cum[s])
            chi = int(cum[s + 1])
            r = rng // total
            low = low + r * clo
            rng = r * (chi - clo)
            low, rng, n = _renorm_emit(low, rng, out, n)
        return _flush(low, out, n)

    @jit
    def rc_decode_static(data, cum, count, out):
        total = int(cum[len(cum) - 1])
        w = len(cum) - 1
        low = 0
        rng = RMAX
        code, ptr = _preload(data)
        for i in range(count):
            r = rng // total
            dv = (code - low) // r
            if dv >= total:
                dv = total - 1
            lo_s = 0
            hi_s = w - 1
            while lo_s < hi_s:
                mid = (lo_s + hi_s + 1) // 2
                if int(cum[mid]) <= dv:
                    lo_s = mid
                else:
                    hi_s = mid - 1
            out[i] = lo_s
            clo = int(cum[lo_s])
            chi = int(cum[lo_s + 1])
            low = low + r * clo
            rng = r * (chi - clo)
            low, rng, code, ptr = _renorm_read(low, rng, code, ptr, data)

    @jit
    def rc_encode_gauss(symbols, means, scales, zmin, zmax, out):
        tw = TOTAL_G - (zmax - zmin + 1)
        low = 0
        rng = RMAX
        n = 0
        lmu = 0.0
        lsig = -1.0
        cdf_lo = 0.0
        cdf_hi = 0.0
        for i in range(len(symbols)):
            mu = float(means[i])
            sig = float(scales[i])
            if sig != lsig or mu != lmu:
                cdf_lo = _ndtr((float(zmin) - 0.5 - mu) / sig)
                cdf_hi = _ndtr((float(zmax) + 0.5 - mu) / sig)
                lmu = mu
                lsig = sig
            z = int(symbols[i])
            a = _gauss_cum(z, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw)
            b = _gauss_cum(z + 1, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw)
            r = rng // TOTAL_G
            low = low + r * a
            rng = r * (b - a)
            low, rng, n = _renorm_emit(low, rng, out, n)
        return _flush(low, out, n)

    @jit
    def rc_decode_gauss(data, means, scales, zmin, zmax, count, out):
        tw = TOTAL_G - (zmax - zmin + 1)
        low = 0
        rng = RMAX
        code, ptr = _preload(data)
        lmu = 0.0
        lsig = -1.0
        cdf_lo = 0.0
        cdf_hi = 0.0
        for i in range(count):
            mu = float(means[i])
            sig = float(scales[i])
            if sig != lsig or mu != lmu:
                cdf_lo = _ndtr((float(zmin) - 0.5 - mu) / sig)
                cdf_hi = _ndtr((float(zmax) + 0.5 - mu) / sig)
                lmu = mu
                lsig = sig
            r = rng // TOTAL_G
            dv = (code - low) // r
            if dv >= TOTAL_G:
                dv = TOTAL_G - 1
            lo_z = zmin
            hi_z = zmax
            while lo_z < hi_z:
                mid = (lo_z + hi_z) // 2
                if _gauss_cum(mid + 1, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw) <= dv:
                    lo_z = mid + 1
                else:
                    hi_z = mid
            out[i] = lo_z
            a = _gauss_cum(lo_z, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw)
            b = _gauss_cum(lo_z + 1, mu, sig, cdf_lo, cdf_hi, zmin, zmax, tw)
            low = low + r * a
            rng = r * (b - a)
            low, rng, code, ptr = _renorm_read(low, rng, code, ptr, data)

    class _Coder:
        pass

    c = _Coder()
    c.expd = _expd
    c.ndtr = _ndtr
    c.gauss_cum = _gauss_cum
    c.rc_encode_static = rc_encode_static
    c.rc_decode_static = rc_decode_static
    c.rc_encode_gauss = rc_encode_gauss
    c.rc_decode_gauss = rc_decode_gauss
    return c


def _identity(fn):
    return fn


coder_py = _build_coder(_identity)
coder_nb = _build_coder(njit) if HAVE_NUMBA else None
coder = coder_nb if USE_NUMBA else coder_py


# ---------------------------------------------------------------------------
# Range-coder wrappers
# ---------------------------------------------------------------------------


def rc_encode_static(indices: np.ndarray, cum: np.ndarray) -> bytes:
    """Range-encode support indices against a cumulative frequency table."""
    out = np.empty(indices.size * 10 + 32, dtype=np.uint8)
    n = coder.rc_encode_static(indices.astype(np.int64), cum.astype(np.int64), out)
    return bytes(out[: int(n)])


def rc_decode_static(data: bytes, cum: np.ndarray, count: int) -> np.ndarray:
    out = np.empty(count, dtype=np.int64)
    buf = np.frombuffer(data, dtype=np.uint8)
    coder.rc_decode_static(buf, cum.astype(np.int64), count, out)
    return out


def rc_encode_gaussian(
    symbols: np.ndarray, means: np.ndarray, scales: np.ndarray, zmin: int, zmax: int
) -> bytes:
    out = np.empty(symbols.size * 10 + 32, dtype=np.uint8)
    n = coder.rc_encode_gauss(
        symbols.astype(np.int64),
        means.astype(np.float64),
        scales.astype(np.float64),
        int(zmin),
        int(zmax),
        out,
    )
    return bytes(out[: int(n)])


def rc_decode_gaussian(
    data: bytes, means: np.ndarray, scales: np.ndarray, zmin: int, zmax: int, count: int
) -> np.ndarray:
    out = np.empty(count, dtype=np.int64)
    buf = np.frombuffer(data, dtype=np.uint8)
    coder.rc_decode_gauss(
        buf,
        means.astype(np.float64),
        scales.astype(np.float64),
        int(zmin),
        int(zmax),
        count,
        out,
    )
    return out


# ---------------------------------------------------------------------------
# Bilinear warp
# ---------------------------------------------------------------------------


def _warp_np(src, flow, out):
    h, w, _ = src.shape
    gx = np.arange(w, dtype=np.float64)[None, :]
    gy = np.arange(h, dtype=np.float64)[:, None]
    sx = np.clip(gx + flow[:, :, 0], 0.0, w - 1.0)
    sy = np.clip(gy + flow[:, :, 1], 0.0, h - 1.0)
    x0 = sx.astype(np.int64)
    y0 = sy.astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]
    a = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
    b = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
    out[:] = a * (1.0 - fy) + b * fy


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _warp_nb(src, flow, out):  # pragma: no cover - numba path
        h, w, c = src.shape
        for y in prange(h):
            for x in range(w):
                sx = x + flow[y, x, 0]
                sy = y + flow[y, x, 1]
                if sx < 0.0:
                    sx = 0.0
                elif sx > w - 1.0:
                    sx = w - 1.0
                if sy < 0.0:
                    sy = 0.0
                elif sy > h - 1.0:
                    sy = h - 1.0
                x0 = int(sx)
                y0 = int(sy)
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = sx - x0
                fy = sy - y0
                for ch in range(c):
                    a = src[y0, x0, ch] * (1.0 - fx) + src[y0, x1, ch] * fx
                    b = src[y1, x0, ch] * (1.0 - fx) + src[y1, x1, ch] * fx
                    out[y, x, ch] = a * (1.0 - fy) + b * fy

else:
    _warp_nb = None


def warp_bilinear(src: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward warp: out(p) = bilinear sample of src at p + flow(p), clamped."""
    out = np.empty_like(src)
    if USE_NUMBA:
        _warp_nb(src, flow, out)
    else:
        _warp_np(src, flow, out)
    return out


# ---------------------------------------------------------------------------
# Trilinear warp over a blur stack
# ---------------------------------------------------------------------------


def _sswarp_np(stack, flow, scale, out):
    nl, h, w, _ = stack.shape
    clamped = int(np.count_nonzero(scale < 0.0) + np.count_nonzero(scale > nl - 1.0))
    s = np.clip(scale, 0.0, nl - 1.0)
    k0 = s.astype(np.int64)
    k1 = np.minimum(k0 + 1, nl - 1)
    fs = (s - k0)[:, :, None]
    gx = np.arange(w, dtype=np.float64)[None, :]
    gy = np.arange(h, dtype=np.float64)[:, None]
    sx = np.clip(gx + flow[:, :, 0], 0.0, w - 1.0)
    sy = np.clip(gy + flow[:, :, 1], 0.0, h - 1.0)
    x0 = sx.astype(np.int64)
    y0 = sy.astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]
    a0 = stack[k0, y0, x0] * (1.0 - fx) + stack[k0, y0, x1] * fx
    b0 = stack[k0, y1, x0] * (1.0 - fx) + stack[k0, y1, x1] * fx
    va = a0 * (1.0 - fy) + b0 * fy
    a1 = stack[k1, y0, x0] * (1.0 - fx) + stack[k1, y0, x1] * fx
    b1 = stack[k1, y1, x0] * (1.0 - fx) + stack[k1, y1, x1] * fx
    vb = a1 * (1.0 - fy) + b1 * fy
    out[:] = va * (1.0 - fs) + vb * fs
    return clamped


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _sswarp_nb(stack, flow, scale, out):  # pragma: no cover - numba path
        nl, h, w, c = stack.shape
        clamped = 0
        for y in prange(h):
            row_clamped = 0
            for x in range(w):
                s = scale[y, x]
                if s < 0.0:
                    s = 0.0
                    row_clamped += 1
                elif s > nl - 1.0:
                    s = nl - 1.0
                    row_clamped += 1
                k0 = int(s)
                k1 = k0 + 1 if k0 + 1 < nl else nl - 1
                fs = s - k0
                sx = x + flow[y, x, 0]
                sy = y + flow[y, x, 1]
                if sx < 0.0:
                    sx = 0.0
                elif sx > w - 1.0:
                    sx = w - 1.0
                if sy < 0.0:
                    sy = 0.0
                elif sy > h - 1.0:
                    sy = h - 1.0
                x0 = int(sx)
                y0 = int(sy)
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = sx - x0
                fy = sy - y0
                for ch in range(c):
                    a0 = stack[k0, y0, x0, ch] * (1.0 - fx) + stack[k0, y0, x1, ch] * fx
                    b0 = stack[k0, y1, x0, ch] * (1.0 - fx) + stack[k0, y1, x1, ch] * fx
                    va = a0 * (1.0 - fy) + b0 * fy
                    a1 = stack[k1, y0, x0, ch] * (1.0 - fx) + stack[k1, y0, x1, ch] * fx
                    b1 = stack[k1, y1, x0, ch] * (1.0 - fx) + stack[k1, y1, x1, ch] * fx
                    vb = a1 * (1.0 - fy) + b1 * fy
                    out[y, x, ch] = va * (1.0 - fs) + vb * fs
            clamped += row_clamped
        return clamped

else:
    _sswarp_nb = None


def trilinear_warp(stack: np.ndarray, flow: np.ndarray, scale: np.ndarray, out: np.ndarray) -> int:
    """Blur-stack warp; returns the number of scale samples clamped into range."""
    if USE_NUMBA:
        return int(_sswarp_nb(stack, flow, scale, out))
    return _sswarp_np(stack, flow, scale, out)


# ---------------------------------------------------------------------------
# Block SAD search (integer fixed-point, exact tie-breaks)
# ---------------------------------------------------------------------------
#
# The candidate with the smallest packed key wins; the key orders by
# (SAD, |vector|^2, vx, vy), which makes the selection independent of the
# scan order and identical across backends.


def _block_search_np(tgt, ref, base, radius, block, out, min_overlap, zero_bias):
    h, w = tgt.shape
    by, bx = out.shape[:2]
    ys = (np.arange(by) * block)[:, None, None]
    xs = (np.arange(bx) * block)[None, :, None]
    ib = np.arange(block)
    tb = tgt[: by * block, : bx * block].reshape(by, block, bx, block).transpose(0, 2, 1, 3)
    tb = tb.astype(np.int64)
    best_key = np.full((by, bx), np.iinfo(np.int64).max, dtype=np.int64)
    best_vx = np.zeros((by, bx), dtype=np.int64)
    best_vy = np.zeros((by, bx), dtype=np.int64)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            vx = base[:, :, 0] + dx
            vy = base[:, :, 1] + dy
            sy = np.clip(ys + ib[None, None, :] + vy[:, :, None], 0, h - 1)
            sx = np.clip(xs + ib[None, None, :] + vx[:, :, None], 0, w - 1)
            patch = ref[sy[:, :, :, None], sx[:, :, None, :]]
            sad = np.abs(tb - patch).sum(axis=(2, 3)) + zero_bias * (np.abs(vx) + np.abs(vy))
            key = (((sad << 16) + vx * vx + vy * vy) << 16) + ((vx + 128) << 8) + (vy + 128)
            if min_overlap > 0:
                # Candidates must sample at least min_overlap real (unclamped)
                # pixels per axis; blocks matching mostly edge-replicated
                # content are spurious. The base vector always competes.
                y0v = ys[:, :, 0] + vy
                x0v = xs[:, :, 0] + vx
                ov_y = np.minimum(h, y0v + block) - np.maximum(0, y0v)
                ov_x = np.minimum(w, x0v + block) - np.maximum(0, x0v)
                valid = ((ov_y >= min_overlap) & (ov_x >= min_overlap)) | ((dx == 0) & (dy == 0))
            else:
                valid = np.ones((by, bx), dtype=bool)
            better = valid & (key < best_key)
            best_key = np.where(better, key, best_key)
            best_vx = np.where(better, vx, best_vx)
            best_vy = np.where(better, vy, best_vy)
    out[:, :, 0] = best_vx
    out[:, :, 1] = best_vy


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _block_search_nb(tgt, ref, base, radius, block, out, min_overlap, zero_bias):  # pragma: no cover
        h, w = tgt.shape
        by, bx = out.shape[0], out.shape[1]
        for iby in prange(by):
            for ibx in range(bx):
                y0 = iby * block
                x0 = ibx * block
                bvx = base[iby, ibx, 0]
                bvy = base[iby, ibx, 1]
                best_key = np.int64(1) << 62
                best_vx = np.int64(0)
                best_vy = np.int64(0)
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        vx = bvx + dx
                        vy = bvy + dy
                        if min_overlap > 0 and not (dx == 0 and dy == 0):
                            oy_lo = y0 + vy if y0 + vy > 0 else 0
                            oy_hi = y0 + vy + block if y0 + vy + block < h else h
                            ox_lo = x0 + vx if x0 + vx > 0 else 0
                            ox_hi = x0 + vx + block if x0 + vx + block < w else w
                            if oy_hi - oy_lo < min_overlap or ox_hi - ox_lo < min_overlap:
                                continue
                        sad = np.int64(0)
                        for iy in range(block):
                            sy = y0 + iy + vy
                            if sy < 0:
                                sy = 0
                            elif sy > h - 1:
                                sy = h - 1
                            for ix in range(block):
                                sx = x0 + ix + vx
                                if sx < 0:
                                    sx = 0
                                elif sx > w - 1:
                                    sx = w - 1
                                d = tgt[y0 + iy, x0 + ix] - ref[sy, sx]
                                if d < 0:
                                    d = -d
                                sad += d
                        avx = -vx if vx < 0 else vx
                        avy = -vy if vy < 0 else vy
                        sad += zero_bias * (avx + avy)
                        key = (((sad << 16) + vx * vx + vy * vy) << 16) + ((vx + 128) << 8) + (vy + 128)
                        if key < best_key:
                            best_key = key
                            best_vx = vx
                            best_vy = vy
                out[iby, ibx, 0] = best_vx
                out[iby, ibx, 1] = best_vy

else:
    _block_search_nb = None


def block_search(
    tgt: np.ndarray,
    ref: np.ndarray,
    base: np.ndarray,
    radius: int,
    block: int,
    min_overlap: int = 0,
    zero_bias: int = 0,
) -> np.ndarray:
    """Best integer displacement per block, refined around ``base`` vectors.

    ``tgt``/``ref`` are int64 fixed-point luma planes; returns (By, Bx, 2)
    int64 vectors in (dx, dy) order. ``min_overlap`` > 0 requires candidates
    to sample that many real pixels per axis (the base vector is exempt).
    ``zero_bias`` adds that many SAD units per unit of |v| L1 norm, turning
    noise-level SAD differences into ties resolved toward the zero vector.
    """
    by = tgt.shape[0] // block
    bx = tgt.shape[1] // block
    out = np.empty((by, bx, 2), dtype=np.int64)
    if USE_NUMBA:
        _block_search_nb(tgt, ref, base.astype(np.int64), radius, block, out, min_overlap, zero_bias)
    else:
        _block_search_np(tgt, ref, base.astype(np.int64), radius, block, out, min_overlap, zero_bias)
    return out
