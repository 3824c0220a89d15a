"""Quantization, probability models, rate estimation, and stream serialization.

Two model families back the range coder:

* :class:`GaussianModel` — a mean-scale Gaussian conditional per symbol, with
  the standard deviation clamped at 0.11. Coding uses a windowed, quantized
  CDF where every integer bin keeps at least a 2^-32 probability floor.
* :class:`StaticModel` — a two-pass frequency table: the encoder counts
  symbols, scales the counts to a fixed total, and serializes the table into
  the stream header so the decoder is data-independent.

Serialized stream layout (little-endian), embedded in container chunks:
``[u32 symbol_count][u8 model_tag][model header][coded bytes]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr as _ndtr

from . import kernels
from .bitio import ByteReader, ByteWriter
from .errors import StreamError

SIGMA_MIN = 0.11
_PROB_FLOOR_BITS = 32.0

TAG_STATIC = 0
TAG_GAUSS_EXPLICIT = 1
TAG_GAUSS_BANDED = 2

# 2^(k/8) for k in 0..7, written out so every platform builds the exact same
# sigma grid (ldexp and multiply are correctly rounded everywhere).
_ROOT8 = np.array(
    [
        1.0,
        1.0905077326652577,
        1.189207115002721,
        1.2968395546510096,
        1.4142135623730951,
        1.5422108254079407,
        1.681792830507429,
        1.8340080864093424,
    ]
)
_J = np.arange(256)
SIGMA_GRID = SIGMA_MIN * np.ldexp(_ROOT8[_J % 8], _J // 8)


def quantize(values: np.ndarray, step: float) -> np.ndarray:
    """Uniform quantization, rounding half away from zero."""
    if step <= 0:
        raise ValueError("step must be positive")
    v = np.asarray(values, dtype=np.float64)
    return (np.sign(v) * np.floor(np.abs(v) / step + 0.5)).astype(np.int64)


def dequantize(symbols: np.ndarray, step: float) -> np.ndarray:
    return np.asarray(symbols, dtype=np.float64) * step


def sigma_to_index(sigma: np.ndarray) -> np.ndarray:
    """Nearest index into the logarithmic sigma grid (u8)."""
    s = np.maximum(np.asarray(sigma, dtype=np.float64), 1e-12)
    j = np.rint(8.0 * np.log2(s / SIGMA_MIN))
    return np.clip(j, 0, 255).astype(np.uint8)


@dataclass
class GaussianModel:
    """Per-symbol mean/scale Gaussian conditional; scales clamped >= 0.11."""

    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.scales = np.maximum(np.asarray(self.scales, dtype=np.float64), SIGMA_MIN)
        if self.means.shape != self.scales.shape:
            raise ValueError("means and scales must have the same shape")


@dataclass
class BandedGaussianModel:
    """Zero-mean Gaussian whose sigma repeats per band: symbol i gets
    SIGMA_GRID[sigma_indices[i // reps]]. Self-describing on the wire."""

    sigma_indices: np.ndarray
    reps: int

    def __post_init__(self):
        self.sigma_indices = np.asarray(self.sigma_indices, dtype=np.uint8)
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    @property
    def count(self) -> int:
        return int(self.sigma_indices.size * self.reps)

    def expand(self) -> GaussianModel:
        scales = np.repeat(SIGMA_GRID[self.sigma_indices], self.reps)
        return GaussianModel(means=np.zeros_like(scales), scales=scales)


@dataclass
class StaticModel:
    """Integer frequency table over a contiguous support range."""

    support_lo: int
    frequencies: np.ndarray

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=np.int64)
        if self.frequencies.size == 0 or (self.frequencies < 1).any():
            raise ValueError("every symbol in support needs frequency >= 1")
        if int(self.frequencies.sum()) > kernels.RC_BOT:
            raise ValueError("total frequency exceeds the coder precision")

    @property
    def width(self) -> int:
        return int(self.frequencies.size)

    @property
    def support_hi(self) -> int:
        return self.support_lo + self.width - 1

    @property
    def total(self) -> int:
        return int(self.frequencies.sum())

    def cumulative(self) -> np.ndarray:
        cum = np.zeros(self.width + 1, dtype=np.int64)
        np.cumsum(self.frequencies, out=cum[1:])
        return cum

    @classmethod
    def from_counts(cls, symbols: np.ndarray, target_total: int = 1 << 14) -> "StaticModel":
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size == 0:
            return cls(support_lo=0, frequencies=np.ones(1, dtype=np.int64))
        lo = int(symbols.min())
        hi = int(symbols.max())
        width = hi - lo + 1
        if width > 1 << 20:
            raise StreamError(f"static model support too wide: {width}")
        if width == 1:
            return cls(support_lo=lo, frequencies=np.ones(1, dtype=np.int64))
        counts = np.bincount(symbols - lo, minlength=width).astype(np.int64)
        total = min(max(target_total, 4 * width), 1 << 30)
        base = total - width
        n = int(symbols.size)
        freqs = 1 + (counts * base) // n
        leftover = total - int(freqs.sum())
        freqs[int(np.argmax(counts))] += leftover
        return cls(support_lo=lo, frequencies=freqs)


@dataclass
class LatentStream:
    """Quantized integer symbols plus the model that assigns them code lengths."""

    symbols: np.ndarray
    model: object
    shape: tuple = ()

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64).ravel()
        if self.shape and int(np.prod(self.shape)) != self.symbols.size:
            raise ValueError("shape product must equal the symbol count")


# ---------------------------------------------------------------------------
# Rate estimates (Eq.-style entropy bookkeeping, independent of the coder)
# ---------------------------------------------------------------------------


def gaussian_bits(z, mu, sigma) -> np.ndarray:
    """Code-length estimate -log2(P(z)) under a quantized Gaussian, with the
    per-symbol probability floored at 2^-32."""
    z = np.asarray(z, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.maximum(np.asarray(sigma, dtype=np.float64), SIGMA_MIN)
    p = _ndtr((z - mu + 0.5) / sigma) - _ndtr((z - mu - 0.5) / sigma)
    p = np.maximum(p, 2.0**-_PROB_FLOOR_BITS)
    return -np.log2(p)


def static_bits(symbols: np.ndarray, model: StaticModel) -> np.ndarray:
    idx = np.asarray(symbols, dtype=np.int64) - model.support_lo
    if idx.size and (idx.min() < 0 or idx.max() >= model.width):
        raise StreamError("symbol outside static model support")
    p = model.frequencies[idx] / model.total
    return -np.log2(p)


def stream_bits(stream: LatentStream) -> float:
    """Model cross-entropy of the stream in bits (the H(.) reporting term)."""
    model = stream.model
    if isinstance(model, StaticModel):
        return float(static_bits(stream.symbols, model).sum()) if stream.symbols.size else 0.0
    if isinstance(model, BandedGaussianModel):
        model = model.expand()
    if not isinstance(model, GaussianModel):
        raise TypeError(f"unknown model type {type(model)!r}")
    if stream.symbols.size == 0:
        return 0.0
    return float(gaussian_bits(stream.symbols, model.means, model.scales).sum())


def bits_per_pixel(bits: float, orig_width: int, orig_height: int) -> float:
    """Bits divided by the ORIGINAL (pre-padding) pixel count."""
    if orig_width <= 0 or orig_height <= 0:
        raise ValueError("original dimensions must be positive")
    return bits / float(orig_width * orig_height)


# ---------------------------------------------------------------------------
# Stream serialization
# ---------------------------------------------------------------------------


def _write_static_header(w: ByteWriter, model: StaticModel):
    """Frequency table as (run length, value delta) pairs: the long floor-1
    stretches of sparse supports collapse to single runs."""
    w.i32(model.support_lo)
    w.u32(model.width)
    w.u32(model.total)
    freqs = model.frequencies.tolist()
    runs = []
    i = 0
    while i < len(freqs):
        j = i
        while j < len(freqs) and freqs[j] == freqs[i]:
            j += 1
        runs.append((j - i, freqs[i]))
        i = j
    w.varint(len(runs))
    prev = 0
    for run, value in runs:
        w.varint(run)
        w.svarint(value - prev)
        prev = value


def _read_static_header(r: ByteReader) -> StaticModel:
    lo = r.i32()
    width = r.u32()
    total = r.u32()
    if width == 0 or width > 1 << 20:
        raise StreamError(f"bad static model width {width}")
    freqs = np.empty(width, dtype=np.int64)
    n_runs = r.varint()
    pos = 0
    prev = 0
    for _ in range(n_runs):
        run = r.varint()
        prev += r.svarint()
        if prev < 1:
            raise StreamError("static model frequency below 1")
        if pos + run > width:
            raise StreamError("static model runs overflow the support width")
        freqs[pos : pos + run] = prev
        pos += run
    if pos != width:
        raise StreamError("static model runs do not cover the support")
    model = StaticModel(support_lo=lo, frequencies=freqs)
    if model.total != total:
        raise StreamError("static model total mismatch")
    return model


def _write_banded_header(w: ByteWriter, model: BandedGaussianModel, zmin: int, zmax: int):
    w.i32(zmin)
    w.i32(zmax)
    w.u32(model.reps)
    idx = model.sigma_indices
    w.u16(idx.size)
    runs = []
    i = 0
    while i < idx.size:
        j = i
        while j < idx.size and idx[j] == idx[i] and j - i < 255:
            j += 1
        runs.append((j - i, int(idx[i])))
        i = j
    w.u16(len(runs))
    for run, val in runs:
        w.u8(run)
        w.u8(val)


def _read_banded_header(r: ByteReader):
    zmin = r.i32()
    zmax = r.i32()
    reps = r.u32()
    n_bands = r.u16()
    n_runs = r.u16()
    idx = np.empty(n_bands, dtype=np.uint8)
    pos = 0
    for _ in range(n_runs):
        run = r.u8()
        val = r.u8()
        if pos + run > n_bands:
            raise StreamError("banded sigma runs overflow the band count")
        idx[pos : pos + run] = val
        pos += run
    if pos != n_bands:
        raise StreamError("banded sigma runs do not cover all bands")
    return BandedGaussianModel(sigma_indices=idx, reps=max(1, reps)), zmin, zmax, reps


def _symbol_window(symbols: np.ndarray):
    if symbols.size == 0:
        return 0, 0
    return int(symbols.min()), int(symbols.max())


def range_encode(stream: LatentStream) -> bytes:
    """Serialize a latent stream: header plus range-coded payload."""
    w = ByteWriter()
    symbols = stream.symbols
    w.u32(symbols.size)
    model = stream.model
    if isinstance(model, StaticModel):
        w.u8(TAG_STATIC)
        idx = symbols - model.support_lo
        if idx.size and (idx.min() < 0 or idx.max() >= model.width):
            raise StreamError("symbol outside static model support")
        _write_static_header(w, model)
        if model.width > 1 and symbols.size:
            w.raw(kernels.rc_encode_static(idx, model.cumulative()))
        return w.bytes()
    if isinstance(model, BandedGaussianModel):
        if symbols.size != model.count:
            raise StreamError("banded model length does not match the symbol count")
        w.u8(TAG_GAUSS_BANDED)
        zmin, zmax = _symbol_window(symbols)
        _write_banded_header(w, model, zmin, zmax)
        if symbols.size:
            g = model.expand()
            w.raw(kernels.rc_encode_gaussian(symbols, g.means, g.scales, zmin, zmax))
        return w.bytes()
    if isinstance(model, GaussianModel):
        if symbols.size != model.means.size:
            raise StreamError("Gaussian model length does not match the symbol count")
        w.u8(TAG_GAUSS_EXPLICIT)
        zmin, zmax = _symbol_window(symbols)
        w.i32(zmin)
        w.i32(zmax)
        if symbols.size:
            w.raw(kernels.rc_encode_gaussian(symbols, model.means, model.scales, zmin, zmax))
        return w.bytes()
    raise TypeError(f"unknown model type {type(model)!r}")


def range_decode(data: bytes, model: GaussianModel = None, expected_count=None) -> np.ndarray:
    """Decode a serialized stream back to symbols.

    Static and banded-Gaussian streams are self-describing; explicit Gaussian
    streams need the caller to supply the per-symbol ``model`` (the conditional
    parameters are context the decoder already owns, not wire data).
    """
    r = ByteReader(data)
    count = r.u32()
    if expected_count is not None and count != expected_count:
        raise StreamError(f"stream has {count} symbols, expected {expected_count}")
    tag = r.u8()
    if tag == TAG_STATIC:
        m = _read_static_header(r)
        if count == 0:
            return np.empty(0, dtype=np.int64)
        if m.width == 1:
            return np.full(count, m.support_lo, dtype=np.int64)
        idx = kernels.rc_decode_static(bytes(r.data[r.pos :]), m.cumulative(), count)
        return idx + m.support_lo
    if tag == TAG_GAUSS_BANDED:
        m, zmin, zmax, _ = _read_banded_header(r)
        if count == 0:
            return np.empty(0, dtype=np.int64)
        if m.count != count:
            raise StreamError("banded model does not cover the symbol count")
        g = m.expand()
        return kernels.rc_decode_gaussian(bytes(r.data[r.pos :]), g.means, g.scales, zmin, zmax, count)
    if tag == TAG_GAUSS_EXPLICIT:
        zmin = r.i32()
        zmax = r.i32()
        if count == 0:
            return np.empty(0, dtype=np.int64)
        if model is None:
            raise StreamError("explicit Gaussian stream needs caller-side model parameters")
        if model.means.size != count:
            raise StreamError("Gaussian model does not cover the symbol count")
        return kernels.rc_decode_gaussian(
            bytes(r.data[r.pos :]), model.means, model.scales, zmin, zmax, count
        )
    raise StreamError(f"unknown model tag {tag}")
