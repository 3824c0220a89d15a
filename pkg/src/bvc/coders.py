"""Transform coders: the lossy bottlenecks mapping pictures and motion to
entropy-coded latent streams and back.

* Image/residual coding: blockwise orthonormal DCT-II, uniform quantization
  (DC at ``quant_step``, AC at twice that), zero-mean Gaussian coding with a
  signaled per-band sigma table; the DC band is DPCM-coded before entropy
  coding.
* Flow coding: hierarchical block-match vectors plus a per-block blur-stack
  level minimizing warped SAD, both median-predicted from coded neighbours
  and coded with a two-pass static model. Wire units are quarter-pixel for
  flow and eighth-level for scale.

Every encoder returns the decoder-identical reconstruction computed from its
own symbols, which is what keeps multi-frame prediction drift-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .entropy import (
    BandedGaussianModel,
    LatentStream,
    StaticModel,
    SIGMA_GRID,
    gaussian_bits,
    range_decode,
    range_encode,
    sigma_to_index,
)
from .flow import (
    DEFAULT_FLOW_CONFIG,
    QPEL_MARGIN_PER_PIXEL,
    FlowConfig,
    _luma_fixed,
    estimate_block_flow_qpel,
    expand_block_field,
)
from .scale_space import DEFAULT_LEVELS, BlurStack, ScaleSpaceFlow

_INV_SQRT2 = 0.7071067811865476

FLOW_QUANT = 4  # quarter-pixel wire units
SCALE_QUANT = 8  # eighth-level wire units


def beta_index_to_step(beta_index: int) -> float:
    """Quantizer step ladder: step = 0.5 * 2^(-k/2) for the 8 operating
    points (k=0 coarsest). Built from exact power-of-two scaling so every
    platform derives the identical step."""
    if not 0 <= beta_index <= 7:
        raise ValueError("beta_index must be in 0..7")
    k = beta_index
    base = 0.5 if k % 2 == 0 else 0.5 * _INV_SQRT2
    return float(np.ldexp(base, -(k // 2)))


@dataclass(frozen=True)
class CoderConfig:
    quant_step: float
    block_size: int = 8
    beta_index: int = 0
    no_motion: bool = False

    def __post_init__(self):
        if self.quant_step <= 0:
            raise ValueError("quant_step must be positive")
        if self.block_size not in (8, 16):
            raise ValueError("block_size must be 8 or 16")

    @classmethod
    def from_beta_index(cls, beta_index: int, block_size: int = 8, no_motion: bool = False):
        return cls(
            quant_step=beta_index_to_step(beta_index),
            block_size=block_size,
            beta_index=beta_index,
            no_motion=no_motion,
        )


_EXPECTED_STREAMS = {
    "I": ({"image"},),
    "P": ({"flow", "residual"}, {"residual"}),
    "B": ({"flow", "residual"}, {"residual"}),
}


@dataclass
class CodedFrameData:
    """Named stream blobs for one frame plus the reconstruction side."""

    streams: dict
    reconstruction: np.ndarray

    def validate(self, frame_type: str) -> "CodedFrameData":
        expected = _EXPECTED_STREAMS.get(frame_type)
        if expected is None:
            raise ValueError(f"unknown frame type {frame_type!r}")
        if set(self.streams) not in expected:
            raise ValueError(
                f"{frame_type}-frame carries streams {sorted(self.streams)}, "
                f"expected one of {[sorted(e) for e in expected]}"
            )
        return self


# ---------------------------------------------------------------------------
# Blockwise DCT
# ---------------------------------------------------------------------------

_DCT_CACHE = {}


def dct_matrix(n: int) -> np.ndarray:
    if n not in _DCT_CACHE:
        k = np.arange(n)[:, None]
        x = np.arange(n)[None, :]
        m = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
        m[0, :] /= np.sqrt(2.0)
        _DCT_CACHE[n] = m
    return _DCT_CACHE[n]


def _blockwise_dct(img: np.ndarray, bs: int) -> np.ndarray:
    h, w, c = img.shape
    m = dct_matrix(bs)
    blocks = img.reshape(h // bs, bs, w // bs, bs, c)
    t1 = np.einsum("ui,yixwc->yuxwc", m, blocks, optimize=False)
    return np.einsum("vw,yuxwc->yuxvc", m, t1, optimize=False)


def _blockwise_idct(coef: np.ndarray, bs: int) -> np.ndarray:
    m = dct_matrix(bs)
    t1 = np.einsum("ui,yuxvc->yixvc", m, coef, optimize=False)
    out = np.einsum("vw,yixvc->yixwc", m, t1, optimize=False)
    by, _, bx, _, c = out.shape
    return out.reshape(by * bs, bx * bs, c)


def _step_matrix(bs: int, step: float) -> np.ndarray:
    sm = np.full((bs, bs), 2.0 * step)
    sm[0, 0] = step
    return sm


def _fit_band_sigmas(arr: np.ndarray) -> np.ndarray:
    """Signaled sigma grid index per (channel, band); chosen by evaluating
    the estimated code length under a few robust scale candidates (rms,
    MAD-based, and mean-absolute) so single outliers cannot inflate a
    band's sigma and tax its zeros."""
    x = arr.astype(np.float64)
    rms = np.sqrt(np.mean(x**2, axis=2))
    mad = 1.4826 * np.median(np.abs(x), axis=2)
    mabs = 1.2533 * np.mean(np.abs(x), axis=2)
    candidates = np.unique(
        np.stack([sigma_to_index(s) for s in (rms, mad, mabs)], axis=0), axis=0
    )
    best_bits = None
    best_idx = None
    for cand in candidates:
        sig = SIGMA_GRID[cand][:, :, None]
        bits = gaussian_bits(x, 0.0, sig).sum(axis=2)
        if best_bits is None:
            best_bits = bits
            best_idx = cand.copy()
        else:
            better = bits < best_bits
            best_bits = np.where(better, bits, best_bits)
            best_idx = np.where(better, cand, best_idx)
    return best_idx.astype(np.uint8)


class _TransformCoder:
    """Shared DCT/quantizer/Gaussian machinery for image and residual coding."""

    def __init__(self, cfg: CoderConfig, clamp_lo: float, clamp_hi: float):
        self.cfg = cfg
        self.clamp_lo = clamp_lo
        self.clamp_hi = clamp_hi

    def _check_dims(self, h: int, w: int):
        bs = self.cfg.block_size
        if h % bs or w % bs:
            raise ValueError(f"dimensions {w}x{h} not a multiple of block size {bs}")

    def encode(self, img: np.ndarray):
        h, w, c = img.shape
        self._check_dims(h, w)
        bs = self.cfg.block_size
        sm = _step_matrix(bs, self.cfg.quant_step)
        coef = _blockwise_dct(np.ascontiguousarray(img, dtype=np.float64), bs)
        scaled = coef / sm[None, :, None, :, None]
        q = (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)
        nb = bs * bs
        n_blocks = (h // bs) * (w // bs)
        arr = q.transpose(4, 1, 3, 0, 2).reshape(c, nb, n_blocks)
        dc = arr[:, 0, :]
        arr[:, 0, :] = np.concatenate([dc[:, :1], np.diff(dc, axis=1)], axis=1)
        idx = _fit_band_sigmas(arr)
        model = BandedGaussianModel(sigma_indices=idx.ravel(), reps=n_blocks)
        symbols = arr.ravel()
        blob = range_encode(LatentStream(symbols=symbols, model=model, shape=(c, nb, n_blocks)))
        recon = self._symbols_to_image(symbols, h, w, c)
        return blob, recon

    def decode(self, blob: bytes, height: int, width: int, channels: int = 3) -> np.ndarray:
        self._check_dims(height, width)
        bs = self.cfg.block_size
        n_blocks = (height // bs) * (width // bs)
        count = channels * bs * bs * n_blocks
        symbols = range_decode(blob, expected_count=count)
        return self._symbols_to_image(symbols, height, width, channels)

    def _symbols_to_image(self, symbols: np.ndarray, h: int, w: int, c: int) -> np.ndarray:
        bs = self.cfg.block_size
        by = h // bs
        bx = w // bs
        nb = bs * bs
        arr = symbols.reshape(c, nb, by * bx).copy()
        arr[:, 0, :] = np.cumsum(arr[:, 0, :], axis=1)
        sm = _step_matrix(bs, self.cfg.quant_step)
        q = arr.reshape(c, bs, bs, by, bx).transpose(3, 1, 4, 2, 0)
        coef = q.astype(np.float64) * sm[None, :, None, :, None]
        img = _blockwise_idct(coef, bs)
        return np.clip(img, self.clamp_lo, self.clamp_hi)


class ImageCoder(_TransformCoder):
    """Intra coder: the whole picture through the transform bottleneck."""

    def __init__(self, cfg: CoderConfig):
        super().__init__(cfg, clamp_lo=0.0, clamp_hi=1.0)


class ResidualCoder(_TransformCoder):
    """Signed-residual coder; inputs live in [-1, 1]."""

    def __init__(self, cfg: CoderConfig):
        super().__init__(cfg, clamp_lo=-1.0, clamp_hi=1.0)

    def encode(self, residual: np.ndarray):
        if residual.size and (residual.min() < -1.0 or residual.max() > 1.0):
            raise ValueError("residual values must lie in [-1, 1]")
        return super().encode(residual)


# ---------------------------------------------------------------------------
# Flow coder
# ---------------------------------------------------------------------------


def _median3(a, b, c):
    return a + b + c - np.maximum(np.maximum(a, b), c) - np.minimum(np.minimum(a, b), c)


def _predict_grid(v: np.ndarray) -> np.ndarray:
    """Median(left, above, above-right) DPCM, missing neighbours read as 0."""
    left = np.zeros_like(v)
    left[:, 1:] = v[:, :-1]
    up = np.zeros_like(v)
    up[1:, :] = v[:-1, :]
    upright = np.zeros_like(v)
    upright[1:, :-1] = v[:-1, 1:]
    return v - _median3(left, up, upright)


def _unpredict_grid(d: np.ndarray) -> np.ndarray:
    by, bx = d.shape
    v = np.zeros_like(d)
    for i in range(by):
        for j in range(bx):
            left = v[i, j - 1] if j else 0
            up = v[i - 1, j] if i else 0
            upright = v[i - 1, j + 1] if i and j + 1 < bx else 0
            v[i, j] = d[i, j] + _median3(left, up, upright)
    return v


def _block_sad(a: np.ndarray, b: np.ndarray, bs: int) -> np.ndarray:
    h = (a.shape[0] // bs) * bs
    w = (a.shape[1] // bs) * bs
    d = np.abs(a[:h, :w] - b[:h, :w])
    return d.reshape(h // bs, bs, w // bs, bs).sum(axis=(1, 3))


class FlowCoder:
    """Maps (target, reference) to a coded scale-space flow and back.

    The decoded flow is reconstructed from wire symbols through the same code
    path on both sides, so the encoder's returned field matches the
    decoder's bit-exactly.
    """

    def __init__(
        self,
        cfg: CoderConfig,
        flow_cfg: FlowConfig = DEFAULT_FLOW_CONFIG,
        ss_levels: int = DEFAULT_LEVELS,
    ):
        self.cfg = cfg
        self.flow_cfg = flow_cfg
        self.ss_levels = ss_levels

    def encode(self, target: np.ndarray, reference: np.ndarray, stack: BlurStack):
        if target.shape != reference.shape:
            raise ValueError("flow coder needs target/reference of identical shape")
        h, w = target.shape[:2]
        block = self.flow_cfg.block_size
        quarter = estimate_block_flow_qpel(target, reference, self.flow_cfg)
        dx_sym = quarter[:, :, 0]
        dy_sym = quarter[:, :, 1]
        # Per-block blur level: SAD of the target against each warped level,
        # with deeper levels charged a margin so reference noise alone cannot
        # trigger blur.
        field = expand_block_field(quarter.astype(np.float64) / FLOW_QUANT, block, h, w)
        tl = _luma_fixed(target)
        level_margin = 4 * QPEL_MARGIN_PER_PIXEL * block * block
        sads = np.stack(
            [
                _block_sad(tl, _luma_fixed(kernels.warp_bilinear(stack.levels[k], field)), block)
                + level_margin * k
                for k in range(stack.level_count)
            ]
        )
        sel = np.argmin(sads, axis=0).astype(np.int64)
        sc_sym = sel * SCALE_QUANT
        wire = np.concatenate(
            [
                _predict_grid(dx_sym).ravel(),
                _predict_grid(dy_sym).ravel(),
                _predict_grid(sc_sym).ravel(),
            ]
        )
        model = StaticModel.from_counts(wire)
        blob = range_encode(LatentStream(symbols=wire, model=model, shape=wire.shape))
        return blob, self._symbols_to_ssf(dx_sym, dy_sym, sc_sym, h, w)

    def decode(self, blob: bytes, height: int, width: int) -> ScaleSpaceFlow:
        block = self.flow_cfg.block_size
        by = height // block
        bx = width // block
        n = by * bx
        wire = range_decode(blob, expected_count=3 * n)
        dx_sym = _unpredict_grid(wire[:n].reshape(by, bx))
        dy_sym = _unpredict_grid(wire[n : 2 * n].reshape(by, bx))
        sc_sym = _unpredict_grid(wire[2 * n :].reshape(by, bx))
        return self._symbols_to_ssf(dx_sym, dy_sym, sc_sym, height, width)

    def _symbols_to_ssf(self, dx_sym, dy_sym, sc_sym, h, w) -> ScaleSpaceFlow:
        block = self.flow_cfg.block_size
        bvals = np.stack(
            [
                dx_sym.astype(np.float64) / FLOW_QUANT,
                dy_sym.astype(np.float64) / FLOW_QUANT,
                sc_sym.astype(np.float64) / SCALE_QUANT,
            ],
            axis=-1,
        )
        dense = expand_block_field(bvals, block, h, w)
        scale = np.clip(dense[:, :, 2], 0.0, self.ss_levels - 1.0)
        return ScaleSpaceFlow(spatial=np.ascontiguousarray(dense[:, :, :2]), scale=scale)
