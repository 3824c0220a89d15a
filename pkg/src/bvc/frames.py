"""Core picture types, BT.601 color conversion, padding/cropping, raw video I/O.

Images are float64 numpy arrays of shape (H, W, C) with C in {1, 3} and a
nominal [0, 1] sample range. All operations are pure; 8-bit quantization
(round half away from zero) happens only at file boundaries.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as _PILImage

from .errors import CodecError

# BT.601 luma coefficients (limited-range YCbCr).
_KR = 0.299
_KG = 0.587
_KB = 0.114


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round half away from zero (numpy's default rounds half to even)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_uint8(x: np.ndarray) -> np.ndarray:
    return round_half_away(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(x: np.ndarray) -> np.ndarray:
    return x.astype(np.float64) / 255.0


def check_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"{name} must be an (H, W, C) array with 1 or 3 channels")
    if not np.isfinite(img).all():
        raise ValueError(f"{name} contains non-finite samples")
    return img


@dataclass(frozen=True)
class PaddedImage:
    """An image padded on the right/bottom to a dimension multiple, with the
    original size kept so the decoder can crop back losslessly."""

    image: np.ndarray
    orig_height: int
    orig_width: int


@dataclass
class VideoSequence:
    frames: list = field(default_factory=list)
    frame_rate: float = 30.0

    def __len__(self):
        return len(self.frames)

    def validate(self):
        if self.frames:
            shape = self.frames[0].shape
            for i, f in enumerate(self.frames):
                if f.shape != shape:
                    raise ValueError(f"frame {i} shape {f.shape} != {shape}")
                check_image(f, f"frame {i}")
        return self


def _upsample2x_axis(p: np.ndarray, axis: int) -> np.ndarray:
    """Bilinear 2x upsampling along one axis with half-sample phase:
    out[2i] = 0.25*p[i-1] + 0.75*p[i], out[2i+1] = 0.75*p[i] + 0.25*p[i+1],
    edges replicated. Matches box-filter downsampling sites."""
    p = np.moveaxis(p, axis, 0)
    prev = np.concatenate([p[:1], p[:-1]], axis=0)
    nxt = np.concatenate([p[1:], p[-1:]], axis=0)
    even = 0.25 * prev + 0.75 * p
    odd = 0.75 * p + 0.25 * nxt
    out = np.empty((2 * p.shape[0],) + p.shape[1:], dtype=np.float64)
    out[0::2] = even
    out[1::2] = odd
    return np.moveaxis(out, 0, axis)


def _downsample2x_box(p: np.ndarray) -> np.ndarray:
    h, w = p.shape
    return p.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def yuv420_to_rgb(y_plane, u_plane, v_plane, width: int, height: int) -> np.ndarray:
    """BT.601 limited-range YUV420 planes (values in [0,1]) to an RGB image.

    Chroma is upsampled bilinearly; the output is clamped to [0, 1].
    """
    if width % 2 or height % 2:
        raise ValueError(f"dimensions must be even, got {width}x{height}")
    y_plane = np.asarray(y_plane, dtype=np.float64)
    u_plane = np.asarray(u_plane, dtype=np.float64)
    v_plane = np.asarray(v_plane, dtype=np.float64)
    if y_plane.shape != (height, width):
        raise ValueError(f"Y plane shape {y_plane.shape} != {(height, width)}")
    if u_plane.shape != (height // 2, width // 2) or v_plane.shape != (height // 2, width // 2):
        raise ValueError("chroma planes must be (height/2, width/2)")
    u_full = _upsample2x_axis(_upsample2x_axis(u_plane, 0), 1)
    v_full = _upsample2x_axis(_upsample2x_axis(v_plane, 0), 1)
    yp = (y_plane * 255.0 - 16.0) / 219.0
    pb = (u_full * 255.0 - 128.0) / 224.0
    pr = (v_full * 255.0 - 128.0) / 224.0
    r = yp + 1.402 * pr
    g = yp - (_KB * 1.772 / _KG) * pb - (_KR * 1.402 / _KG) * pr
    b = yp + 1.772 * pb
    return np.clip(np.stack([r, g, b], axis=-1), 0.0, 1.0)


def rgb_to_yuv420(img: np.ndarray):
    """Inverse of :func:`yuv420_to_rgb` up to chroma subsampling loss.

    Returns (y, u, v) planes in [0,1], clamped to the legal limited range.
    """
    check_image(img)
    h, w, c = img.shape
    if c != 3:
        raise ValueError("rgb_to_yuv420 needs a 3-channel image")
    if w % 2 or h % 2:
        raise ValueError(f"dimensions must be even, got {w}x{h}")
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    yp = _KR * r + _KG * g + _KB * b
    pb = (b - yp) / 1.772
    pr = (r - yp) / 1.402
    y = np.clip((16.0 + 219.0 * yp) / 255.0, 16.0 / 255.0, 235.0 / 255.0)
    u = np.clip((128.0 + 224.0 * _downsample2x_box(pb)) / 255.0, 16.0 / 255.0, 240.0 / 255.0)
    v = np.clip((128.0 + 224.0 * _downsample2x_box(pr)) / 255.0, 16.0 / 255.0, 240.0 / 255.0)
    return y, u, v


def pad_to_multiple(img: np.ndarray, multiple: int) -> PaddedImage:
    """Replicate-edge pad on the right/bottom so both dims divide ``multiple``."""
    if multiple < 1:
        raise ValueError("multiple must be >= 1")
    check_image(img)
    h, w, _ = img.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        img = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return PaddedImage(image=img, orig_height=h, orig_width=w)


def crop_to_original(p: PaddedImage) -> np.ndarray:
    return p.image[: p.orig_height, : p.orig_width].copy()


def read_raw_yuv(path, width: int, height: int, frame_rate: float = 30.0, max_frames=None) -> VideoSequence:
    """Read a headerless frame-sequential YUV420 8-bit file as RGB frames."""
    frame_bytes = width * height * 3 // 2
    size = os.path.getsize(path)
    if size % frame_bytes:
        raise CodecError(
            f"truncated raw file: {size} bytes is not a multiple of the "
            f"{frame_bytes}-byte frame size for {width}x{height} YUV420"
        )
    count = size // frame_bytes
    if max_frames is not None:
        count = min(count, max_frames)
    frames = []
    ysz = width * height
    csz = ysz // 4
    with open(path, "rb") as fh:
        for _ in range(count):
            raw = np.frombuffer(fh.read(frame_bytes), dtype=np.uint8)
            y = from_uint8(raw[:ysz].reshape(height, width))
            u = from_uint8(raw[ysz : ysz + csz].reshape(height // 2, width // 2))
            v = from_uint8(raw[ysz + csz :].reshape(height // 2, width // 2))
            frames.append(yuv420_to_rgb(y, u, v, width, height))
    return VideoSequence(frames=frames, frame_rate=frame_rate)


def write_raw_yuv(seq: VideoSequence, path) -> None:
    with open(path, "wb") as fh:
        for frame in seq.frames:
            y, u, v = rgb_to_yuv420(frame)
            fh.write(to_uint8(y).tobytes())
            fh.write(to_uint8(u).tobytes())
            fh.write(to_uint8(v).tobytes())


def write_png_sequence(seq: VideoSequence, directory) -> None:
    """Write frames as 8-bit RGB PNGs named frame_000000.png, frame_000001.png, …"""
    os.makedirs(directory, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        arr = to_uint8(frame)
        if arr.shape[2] == 1:
            arr = np.repeat(arr, 3, axis=2)
        _PILImage.fromarray(arr, mode="RGB").save(os.path.join(directory, f"frame_{i:06d}.png"))


def read_png_sequence(directory, frame_rate: float = 30.0) -> VideoSequence:
    names = sorted(n for n in os.listdir(directory) if re.search(r"\.png$", n, re.IGNORECASE))
    frames = []
    for n in names:
        with _PILImage.open(os.path.join(directory, n)) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        frames.append(from_uint8(arr))
    return VideoSequence(frames=frames, frame_rate=frame_rate)
