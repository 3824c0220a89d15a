"""Per-frame quality metrics: PSNR and multi-scale SSIM in RGB.

PSNR is 10*log10(1/MSE) with MSE taken jointly over all channels of [0,1]
images; identical inputs return the +inf sentinel (reported, but excluded
from curve fitting downstream).

MS-SSIM follows the standard 5-scale definition: an 11-tap Gaussian window
with sigma 1.5, scale weights [0.0448, 0.2856, 0.3001, 0.2363, 0.1333], and
2x2 mean pooling between scales. Images too small for five scales fall back
to fewer scales with renormalized weights and a warning.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.signal import convolve

MS_SSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window() -> np.ndarray:
    half = (_WINDOW_SIZE - 1) / 2.0
    x = np.arange(_WINDOW_SIZE) - half
    g = np.exp(-(x**2) / (2.0 * _WINDOW_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


_WINDOW = _gaussian_window()


def _ssim_terms(x: np.ndarray, y: np.ndarray):
    """Mean luminance and contrast-structure terms of one channel pair,
    valid-region windowed statistics."""
    c1 = _K1 * _K1
    c2 = _K2 * _K2
    mu_x = convolve(x, _WINDOW, mode="valid", method="direct")
    mu_y = convolve(y, _WINDOW, mode="valid", method="direct")
    xx = convolve(x * x, _WINDOW, mode="valid", method="direct") - mu_x * mu_x
    yy = convolve(y * y, _WINDOW, mode="valid", method="direct") - mu_y * mu_y
    xy = convolve(x * y, _WINDOW, mode="valid", method="direct") - mu_x * mu_y
    lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    cs = (2.0 * xy + c2) / (xx + yy + c2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def _downsample(x: np.ndarray) -> np.ndarray:
    h = (x.shape[0] // 2) * 2
    w = (x.shape[1] // 2) * 2
    return x[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def ms_ssim_scales(min_dim: int) -> int:
    """How many dyadic scales fit an image: scale s needs min_dim/2^(s-1) >= 11."""
    scales = 1
    while scales < 5 and (min_dim >> scales) >= _WINDOW_SIZE:
        scales += 1
    return scales


def ms_ssim_detailed(a: np.ndarray, b: np.ndarray):
    """Returns (score, scales_used). Contrast terms are floored at zero so
    anti-correlated structure drives the score to ~0 instead of NaN."""
    if a.shape != b.shape:
        raise ValueError(f"ms_ssim shape mismatch: {a.shape} vs {b.shape}")
    min_dim = min(a.shape[0], a.shape[1])
    scales = ms_ssim_scales(min_dim)
    if scales < 1 or min_dim < _WINDOW_SIZE:
        raise ValueError(f"image too small for MS-SSIM: min dim {min_dim} < {_WINDOW_SIZE}")
    if scales < 5:
        warnings.warn(
            f"MS-SSIM falling back to {scales} scales (min dim {min_dim}); weights renormalized",
            stacklevel=2,
        )
    weights = MS_SSIM_WEIGHTS[:scales] / MS_SSIM_WEIGHTS[:scales].sum()
    channels = a.shape[2]
    per_channel = []
    for c in range(channels):
        x = a[:, :, c].astype(np.float64)
        y = b[:, :, c].astype(np.float64)
        score = 1.0
        for s in range(scales):
            ssim_full, cs = _ssim_terms(x, y)
            if s == scales - 1:
                score *= max(ssim_full, 0.0) ** weights[s]
            else:
                score *= max(cs, 0.0) ** weights[s]
                x = _downsample(x)
                y = _downsample(y)
        per_channel.append(score)
    return float(np.mean(per_channel)), scales


def ms_ssim(a: np.ndarray, b: np.ndarray) -> float:
    return ms_ssim_detailed(a, b)[0]
