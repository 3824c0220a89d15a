"""Blur-stack construction and scale-space warping.

A blur stack holds the source image plus progressively blurrier renditions,
all at full resolution: level k is built by k rounds of [5-tap binomial blur
+ 2x decimation] followed by one bilinear upsample back to the original
size. A scale-space flow addresses the stack with a per-pixel spatial
displacement and a per-pixel scale coordinate interpolated linearly between
adjacent levels (trilinear sampling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CodecError
from .flow import check_flow

DEFAULT_LEVELS = 5

_BINOMIAL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class BlurStack:
    """Ordered blur levels, shape (L, H, W, C); level 0 is the source image."""

    levels: np.ndarray

    @property
    def level_count(self) -> int:
        return int(self.levels.shape[0])


@dataclass(frozen=True)
class ScaleSpaceFlow:
    """Spatial displacement plus per-pixel blur-stack coordinate."""

    spatial: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        check_flow(self.spatial, "spatial flow")
        if self.scale.shape != self.spatial.shape[:2]:
            raise ValueError("scale field must match spatial flow dimensions")
        if not np.isfinite(self.scale).all():
            raise ValueError("scale field contains non-finite values")


@dataclass
class WarpDiagnostics:
    """Counts out-of-range scale samples that were clamped (not errored):
    scale fields decoded from lossy latents may overshoot by quantization."""

    scale_clamped: int = 0


def _blur5_axis(img: np.ndarray, axis: int) -> np.ndarray:
    p = np.moveaxis(img, axis, 0)
    padded = np.concatenate([p[:1], p[:1], p, p[-1:], p[-1:]], axis=0)
    out = (
        _BINOMIAL[0] * padded[:-4]
        + _BINOMIAL[1] * padded[1:-3]
        + _BINOMIAL[2] * padded[2:-2]
        + _BINOMIAL[3] * padded[3:-1]
        + _BINOMIAL[4] * padded[4:]
    )
    return np.moveaxis(out, 0, axis)


def _blur_decimate(img: np.ndarray) -> np.ndarray:
    blurred = _blur5_axis(_blur5_axis(img, 0), 1)
    return blurred[::2, ::2]


def _upsample_axis(p: np.ndarray, size: int, factor: int, axis: int) -> np.ndarray:
    """Bilinear upsample along one axis; decimation kept samples at positions
    0, factor, 2*factor, ... so output position y reads coordinate y/factor."""
    p = np.moveaxis(p, axis, 0)
    coords = np.arange(size, dtype=np.float64) / factor
    coords = np.minimum(coords, p.shape[0] - 1.0)
    i0 = coords.astype(np.int64)
    i1 = np.minimum(i0 + 1, p.shape[0] - 1)
    f = coords - i0
    shape = (size,) + (1,) * (p.ndim - 1)
    f = f.reshape(shape)
    out = p[i0] * (1.0 - f) + p[i1] * f
    return np.moveaxis(out, 0, axis)


def build_blur_stack(img: np.ndarray, levels: int = DEFAULT_LEVELS) -> BlurStack:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    h, w = img.shape[:2]
    if min(h, w) < 2 ** (levels - 1):
        raise CodecError(f"image {w}x{h} too small for {levels} blur levels")
    img = np.ascontiguousarray(img, dtype=np.float64)
    out = np.empty((levels,) + img.shape, dtype=np.float64)
    out[0] = img
    cur = img
    for k in range(1, levels):
        cur = _blur_decimate(cur)
        up = _upsample_axis(cur, h, 2**k, axis=0)
        up = _upsample_axis(up, w, 2**k, axis=1)
        out[k] = up
    return BlurStack(levels=out)


def scale_space_warp(stack: BlurStack, ssf: ScaleSpaceFlow, diag: WarpDiagnostics = None) -> np.ndarray:
    """Trilinear sample of the blur stack at p + spatial(p), blending the two
    levels bracketing scale(p). Out-of-range scales clamp and are counted in
    ``diag`` when provided."""
    lv = stack.levels
    if ssf.spatial.shape[:2] != lv.shape[1:3]:
        raise ValueError("scale-space flow dimensions do not match the stack")
    out = np.empty(lv.shape[1:], dtype=np.float64)
    clamped = kernels.trilinear_warp(lv, ssf.spatial, ssf.scale, out)
    if diag is not None:
        diag.scale_clamped += int(clamped)
    return out
