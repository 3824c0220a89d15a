"""Flow fields, backward warping, two-reference flow interpolation, masked
bidirectional warping, and a hierarchical block-matching estimator.

Flow convention is backward mapping: ``warp(src, flow)`` samples ``src`` at
``p + flow(p)``. Fields are float64 arrays of shape (H, W, 2) holding
(dx, dy); masks are (H, W) blend weights in [0, 1].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CodecError

FLOW_MAGIC = b"FLO2"


def check_flow(flow: np.ndarray, name: str = "flow") -> np.ndarray:
    if not isinstance(flow, np.ndarray) or flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"{name} must be an (H, W, 2) array")
    if not np.isfinite(flow).all():
        raise ValueError(f"{name} contains non-finite values")
    return flow


def check_mask(mask: np.ndarray, name: str = "mask") -> np.ndarray:
    if not isinstance(mask, np.ndarray) or mask.ndim != 2:
        raise ValueError(f"{name} must be an (H, W) array")
    if mask.size and (mask.min() < 0.0 or mask.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return mask


def zero_flow(height: int, width: int) -> np.ndarray:
    return np.zeros((height, width, 2), dtype=np.float64)


def warp(src: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward bilinear warp with clamp-to-edge sampling."""
    if src.shape[:2] != flow.shape[:2]:
        raise ValueError(f"warp dims mismatch: {src.shape[:2]} vs {flow.shape[:2]}")
    return kernels.warp_bilinear(np.ascontiguousarray(src, dtype=np.float64), flow)


def interpolate_flow(f01: np.ndarray, f10: np.ndarray, t: float):
    """Linear two-reference flow interpolation at time t in [0, 1]:

    f_t0 = -(1-t)*t*f01 + t^2*f10
    f_t1 = (1-t)^2*f01 - t*(1-t)*f10
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")
    if f01.shape != f10.shape:
        raise ValueError("flow fields must share dimensions")
    f_t0 = (-(1.0 - t) * t) * f01 + (t * t) * f10
    f_t1 = ((1.0 - t) * (1.0 - t)) * f01 - (t * (1.0 - t)) * f10
    return f_t0, f_t1


def bidirectional_warp(x0, x1, f_t0, f_t1, mask) -> np.ndarray:
    """Masked blend of the two warped references:
    warp(x0, f_t0) * m + warp(x1, f_t1) * (1 - m)."""
    if x0.shape != x1.shape or x0.shape[:2] != f_t0.shape[:2] or f_t0.shape != f_t1.shape:
        raise ValueError("bidirectional_warp dimension mismatch")
    if mask.shape != x0.shape[:2]:
        raise ValueError("mask dimensions must match the images")
    check_mask(mask)
    m = mask[:, :, None]
    return warp(x0, f_t0) * m + warp(x1, f_t1) * (1.0 - m)


def consistency_mask(f_t0: np.ndarray, f_t1: np.ndarray, threshold: float) -> np.ndarray:
    """Blend weights from per-reference round-trip flow error.

    The round-trip error of a field combines two terms: the mismatch between
    the flow at p and the flow at the pixel it lands on,
    ||f(p) - f(p + f(p))|| (a consistent field returns to its start when
    traversed twice), and the distance by which p + f(p) falls outside the
    frame (an off-frame sample has no valid round trip at all). Weights are
    0.5 where both references agree and move toward the reference with the
    smaller error; a reference whose error exceeds ``threshold`` is dropped.
    """
    check_flow(f_t0, "f_t0")
    check_flow(f_t1, "f_t1")
    if f_t0.shape != f_t1.shape:
        raise ValueError("flow fields must share dimensions")
    h, w = f_t0.shape[:2]
    gx = np.arange(w, dtype=np.float64)[None, :]
    gy = np.arange(h, dtype=np.float64)[:, None]

    def roundtrip(f):
        resampled = kernels.warp_bilinear(f, f)
        d = f - resampled
        err = np.sqrt(d[:, :, 0] ** 2 + d[:, :, 1] ** 2)
        sx = gx + f[:, :, 0]
        sy = gy + f[:, :, 1]
        oob = (
            np.maximum(-sx, 0.0)
            + np.maximum(sx - (w - 1.0), 0.0)
            + np.maximum(-sy, 0.0)
            + np.maximum(sy - (h - 1.0), 0.0)
        )
        return err + oob

    e0 = roundtrip(f_t0)
    e1 = roundtrip(f_t1)
    with np.errstate(invalid="ignore"):
        w0 = np.clip(1.0 - e0 / threshold, 0.0, 1.0)
        w1 = np.clip(1.0 - e1 / threshold, 0.0, 1.0)
    den = w0 + w1
    safe = np.where(den > 0.0, den, 1.0)
    return np.where(den > 0.0, w0 / safe, 0.5)


# ---------------------------------------------------------------------------
# Block-matching flow estimation (coarse-to-fine SAD search)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowConfig:
    block_size: int = 8
    levels: int = 3
    radius: int = 4


DEFAULT_FLOW_CONFIG = FlowConfig()

# Significance margin for the SAD searches, in fixed-point units per block
# pixel and per quarter-pel of displacement. Candidates whose SAD advantage
# stays under the margin count as ties and resolve toward the smaller
# vector; without it, noise-level SAD differences wobble the argmin and the
# wobble costs downstream bits while buying no prediction quality.
QPEL_MARGIN_PER_PIXEL = 96


def _luma_fixed(img: np.ndarray) -> np.ndarray:
    """Fixed-point (16.16) luma plane for exact integer SAD comparisons."""
    if img.shape[2] == 1:
        luma = img[:, :, 0]
    else:
        luma = (img[:, :, 0] + img[:, :, 1] + img[:, :, 2]) / 3.0
    return np.rint(luma * 65536.0).astype(np.int64)


def _downsample2_sum(p: np.ndarray) -> np.ndarray:
    h = (p.shape[0] // 2) * 2
    w = (p.shape[1] // 2) * 2
    q = p[:h, :w]
    return q.reshape(h // 2, 2, w // 2, 2).sum(axis=(1, 3))


def expand_block_field(values: np.ndarray, block: int, height: int, width: int) -> np.ndarray:
    """Bilinearly expand per-block values (By, Bx, K) to per-pixel (H, W, K).
    Block value (i, j) sits at the block center; edges clamp."""
    by, bx = values.shape[:2]
    half = (block - 1) / 2.0
    cy = np.clip((np.arange(height, dtype=np.float64) - half) / block, 0.0, by - 1.0)
    cx = np.clip((np.arange(width, dtype=np.float64) - half) / block, 0.0, bx - 1.0)
    i0 = cy.astype(np.int64)
    j0 = cx.astype(np.int64)
    i1 = np.minimum(i0 + 1, by - 1)
    j1 = np.minimum(j0 + 1, bx - 1)
    fy = (cy - i0)[:, None, None]
    fx = (cx - j0)[None, :, None]
    v00 = values[np.ix_(i0, j0)]
    v01 = values[np.ix_(i0, j1)]
    v10 = values[np.ix_(i1, j0)]
    v11 = values[np.ix_(i1, j1)]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bot * fy


def estimate_block_flow(target: np.ndarray, reference: np.ndarray, cfg: FlowConfig = DEFAULT_FLOW_CONFIG) -> np.ndarray:
    """Integer displacement per block such that reference[p + v] matches
    target[p], found by coarse-to-fine SAD search. Ties (exact, and SAD
    differences under the significance margin) prefer the smallest |v|,
    then lexicographic (dx, dy)."""
    if target.shape != reference.shape:
        raise ValueError("estimate_flow needs images of identical shape")
    h, w = target.shape[:2]
    if min(h, w) < cfg.block_size:
        raise CodecError(f"image {w}x{h} smaller than one {cfg.block_size}px block")
    tl = _luma_fixed(target)
    rl = _luma_fixed(reference)
    pyr_t = [tl]
    pyr_r = [rl]
    for _ in range(cfg.levels - 1):
        nxt_t = _downsample2_sum(pyr_t[-1])
        if min(nxt_t.shape) < cfg.block_size:
            break
        pyr_t.append(nxt_t)
        pyr_r.append(_downsample2_sum(pyr_r[-1]))
    vecs = None
    for lvl in range(len(pyr_t) - 1, -1, -1):
        t_l = pyr_t[lvl]
        r_l = pyr_r[lvl]
        by = t_l.shape[0] // cfg.block_size
        bx = t_l.shape[1] // cfg.block_size
        if vecs is None:
            base = np.zeros((by, bx, 2), dtype=np.int64)
        else:
            src_i = np.minimum(np.arange(by) // 2, vecs.shape[0] - 1)
            src_j = np.minimum(np.arange(bx) // 2, vecs.shape[1] - 1)
            base = 2 * vecs[np.ix_(src_i, src_j)]
        # Coarse levels sample clamped (their blocks legitimately reach past
        # the downscaled frame); the finest level requires candidates to see
        # at least half a block of real pixels so edge-replicated bands
        # cannot produce spurious far matches.
        min_overlap = (cfg.block_size + 1) // 2 if lvl == 0 else 0
        bias = 4 * QPEL_MARGIN_PER_PIXEL * cfg.block_size * cfg.block_size
        vecs = kernels.block_search(t_l, r_l, base, cfg.radius, cfg.block_size, min_overlap, bias)
    return vecs


def refine_block_flow_qpel(target: np.ndarray, reference: np.ndarray, vecs: np.ndarray, cfg: FlowConfig = DEFAULT_FLOW_CONFIG) -> np.ndarray:
    """Refine integer block vectors to quarter-pel: probe the 7x7 grid of
    quarter offsets around each integer vector against the bilinearly shifted
    reference luma, with margin-penalized fixed-point SAD and the same
    (|v|, dx, dy) tie-break as the integer search. Returns vectors in
    quarter-pel units."""
    block = cfg.block_size
    h, w = target.shape[:2]
    tl = _luma_fixed(target)
    ref_luma = _luma_fixed(reference).astype(np.float64)[:, :, None] / 65536.0
    margin = QPEL_MARGIN_PER_PIXEL * block * block

    def block_sad(a, b):
        hh = (a.shape[0] // block) * block
        ww = (a.shape[1] // block) * block
        d = np.abs(a[:hh, :ww] - b[:hh, :ww])
        return d.reshape(hh // block, block, ww // block, block).sum(axis=(1, 3))

    by, bx = vecs.shape[:2]
    base = np.repeat(np.repeat(vecs.astype(np.float64), block, axis=0), block, axis=1)
    field = np.empty((h, w, 2), dtype=np.float64)
    best_key = np.full((by, bx), np.iinfo(np.int64).max, dtype=np.int64)
    best_q = np.zeros((by, bx, 2), dtype=np.int64)
    for qy in range(-3, 4):
        for qx in range(-3, 4):
            field[:, :, 0] = base[:h, :w, 0] + qx / 4.0
            field[:, :, 1] = base[:h, :w, 1] + qy / 4.0
            warped = kernels.warp_bilinear(ref_luma, field)
            wi = np.rint(warped[:, :, 0] * 65536.0).astype(np.int64)
            sad = block_sad(tl, wi) + margin * (abs(qx) + abs(qy))
            vqx = vecs[:, :, 0] * 4 + qx
            vqy = vecs[:, :, 1] * 4 + qy
            key = (((sad << 16) + vqx * vqx + vqy * vqy) << 18) + ((vqx + 512) << 9) + (vqy + 512)
            better = key < best_key
            best_key = np.where(better, key, best_key)
            best_q[:, :, 0] = np.where(better, vqx, best_q[:, :, 0])
            best_q[:, :, 1] = np.where(better, vqy, best_q[:, :, 1])
    return best_q


def estimate_block_flow_qpel(target: np.ndarray, reference: np.ndarray, cfg: FlowConfig = DEFAULT_FLOW_CONFIG) -> np.ndarray:
    """Block flow in quarter-pel units: integer coarse-to-fine search followed
    by quarter-pel refinement."""
    vecs = estimate_block_flow(target, reference, cfg)
    return refine_block_flow_qpel(target, reference, vecs, cfg)


def estimate_flow(target: np.ndarray, reference: np.ndarray, cfg: FlowConfig = DEFAULT_FLOW_CONFIG) -> np.ndarray:
    """Dense flow: quarter-pel block search expanded bilinearly per pixel."""
    quarter = estimate_block_flow_qpel(target, reference, cfg)
    h, w = target.shape[:2]
    return expand_block_field(quarter.astype(np.float64) / 4.0, cfg.block_size, h, w)


# ---------------------------------------------------------------------------
# Two-reference interpolation (the B-frame reference builder)
# ---------------------------------------------------------------------------

DEFAULT_MASK_THRESHOLD = 1.0


def interpolate_references(
    ref0: np.ndarray,
    ref1: np.ndarray,
    t: float,
    cfg: FlowConfig = DEFAULT_FLOW_CONFIG,
    mask_threshold: float = DEFAULT_MASK_THRESHOLD,
) -> np.ndarray:
    """Build the single interpolated reference from two decoded references.

    Estimates flow in both directions, interpolates the pair to time t,
    derives a consistency mask, and blends the two warped references. Both
    codec sides run this on decoded frames, so it costs zero signaled bits.
    """
    if ref0.shape != ref1.shape:
        raise ValueError("references must share dimensions")
    if not 0.0 < t < 1.0:
        raise ValueError(f"interpolation time must satisfy 0 < t < 1, got {t}")
    f01 = estimate_flow(ref0, ref1, cfg)
    f10 = estimate_flow(ref1, ref0, cfg)
    f_t0, f_t1 = interpolate_flow(f01, f10, t)
    mask = consistency_mask(f_t0, f_t1, mask_threshold)
    return bidirectional_warp(ref0, ref1, f_t0, f_t1, mask)


# ---------------------------------------------------------------------------
# Flow dump format for golden-file tests
# ---------------------------------------------------------------------------


def write_flow(flow: np.ndarray, path) -> None:
    check_flow(flow)
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(FLOW_MAGIC)
        fh.write(struct.pack("<HH", w, h))
        fh.write(flow.astype("<f4").tobytes())


def read_flow(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8 or data[:4] != FLOW_MAGIC:
        raise CodecError("bad flow file magic")
    w, h = struct.unpack("<HH", data[4:8])
    body = np.frombuffer(data, dtype="<f4", offset=8)
    if body.size != h * w * 2:
        raise CodecError("flow file payload size mismatch")
    return body.reshape(h, w, 2).astype(np.float64)
