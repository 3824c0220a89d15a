"""I/P/B encoding and decoding orchestration.

The B-frame path is the architectural core: two decoded references are
interpolated into a single reference (at zero signaled bits, since both
sides recompute it from decoded frames), and that reference feeds the plain
P-frame coding pipeline of flow, warp, and residual.

References are taken exclusively from :class:`DecodedFrameBuffer`, never
from source frames, which together with closed-loop transform coders makes
the decoder's output bit-identical to the encoder's reconstructions.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .coders import CodedFrameData, CoderConfig, FlowCoder, ImageCoder, ResidualCoder, beta_index_to_step
from .container import BitstreamContainer, FrameChunk
from .errors import CodecError, ContainerError, ScheduleError
from .flow import interpolate_references
from .frames import PaddedImage, VideoSequence, check_image, crop_to_original, pad_to_multiple
from .gop import GopSchedule, build_schedule
from .scale_space import DEFAULT_LEVELS, build_blur_stack, scale_space_warp

PAD_MULTIPLE = 64


class DecodedFrameBuffer:
    """Reference store holding only decoder-identical reconstructions."""

    def __init__(self):
        self._frames = {}

    def insert(self, index: int, frame: np.ndarray):
        if index in self._frames:
            raise CodecError(f"frame {index} already decoded")
        frame = frame.copy()
        frame.flags.writeable = False
        self._frames[index] = frame

    def get(self, index: int) -> np.ndarray:
        if index not in self._frames:
            raise ScheduleError(f"reference {index} requested before it was decoded")
        return self._frames[index]

    def __contains__(self, index: int):
        return index in self._frames


@dataclass
class FrameStats:
    frame_index: int
    frame_type: str
    bits_image: float
    bits_flow: float
    bits_residual: float
    bpp: float
    mse: float
    psnr: float


@dataclass
class RateReport:
    frames: list = field(default_factory=list)
    orig_width: int = 0
    orig_height: int = 0

    CSV_COLUMNS = ("frame_index", "frame_type", "bits_image", "bits_flow", "bits_residual", "bpp", "mse", "psnr")

    def total_bits(self) -> float:
        return sum(f.bits_image + f.bits_flow + f.bits_residual for f in self.frames)

    def mean_psnr(self) -> float:
        finite = [f.psnr for f in self.frames if math.isfinite(f.psnr)]
        return sum(finite) / len(finite) if finite else math.inf

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(self.CSV_COLUMNS) + "\n")
        for f in self.frames:
            out.write(
                f"{f.frame_index},{f.frame_type},{f.bits_image:.0f},{f.bits_flow:.0f},"
                f"{f.bits_residual:.0f},{f.bpp:.8f},{f.mse:.10g},{f.psnr}\n"
            )
        return out.getvalue()


# ---------------------------------------------------------------------------
# Single-frame coding
# ---------------------------------------------------------------------------


def encode_i(x: np.ndarray, cfg: CoderConfig):
    """Intra frame: one image stream."""
    blob, recon = ImageCoder(cfg).encode(x)
    return {"image": blob}, recon


def encode_p(x: np.ndarray, x_ref: np.ndarray, cfg: CoderConfig):
    """Predicted frame: coded scale-space flow (unless no_motion), blur-stack
    warp of the reference, then a coded residual. Reconstruction is clamped
    to [0, 1] after residual addition."""
    if x.shape != x_ref.shape:
        raise ValueError("frame and reference dimensions differ")
    streams = {}
    stack = build_blur_stack(x_ref, DEFAULT_LEVELS)
    if cfg.no_motion:
        x_tilde = x_ref
    else:
        flow_blob, ssf = FlowCoder(cfg).encode(x, x_ref, stack)
        streams["flow"] = flow_blob
        x_tilde = scale_space_warp(stack, ssf)
    residual = x - x_tilde
    res_blob, r_hat = ResidualCoder(cfg).encode(residual)
    streams["residual"] = res_blob
    x_hat = np.clip(x_tilde + r_hat, 0.0, 1.0)
    return streams, x_hat


def encode_b(x: np.ndarray, x_ref0: np.ndarray, x_ref1: np.ndarray, t: float, cfg: CoderConfig):
    """Bidirectional frame: interpolate the two references into one (free of
    signaled bits) and run the P-frame pipeline against it."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"B-frame time must satisfy 0 < t < 1, got {t}")
    x_ref = interpolate_references(x_ref0, x_ref1, t)
    return encode_p(x, x_ref, cfg)


def decode_p_streams(streams: dict, x_ref: np.ndarray, cfg: CoderConfig) -> np.ndarray:
    h, w = x_ref.shape[:2]
    stack = build_blur_stack(x_ref, DEFAULT_LEVELS)
    if "flow" in streams:
        ssf = FlowCoder(cfg).decode(streams["flow"], h, w)
        x_tilde = scale_space_warp(stack, ssf)
    else:
        x_tilde = x_ref
    r_hat = ResidualCoder(cfg).decode(streams["residual"], h, w, x_ref.shape[2])
    return np.clip(x_tilde + r_hat, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Whole-video coding
# ---------------------------------------------------------------------------


def _check_container_config(cfg: CoderConfig):
    if cfg.block_size != 8:
        raise CodecError("the container format fixes the transform block size at 8")
    expected = beta_index_to_step(cfg.beta_index)
    if cfg.quant_step != expected:
        raise CodecError(
            "container coding requires quant_step to match the beta_index ladder "
            f"({cfg.quant_step} != {expected}); build configs with CoderConfig.from_beta_index"
        )


def encode_video(seq: VideoSequence, schedule: GopSchedule, cfg: CoderConfig, recon_out: dict = None):
    """Run the schedule, producing a container and a per-frame rate report.

    Frames are padded to a multiple of 64 before coding; distortion is
    measured on the cropped output against the original frames, and bpp
    divides by the original pixel count. When ``recon_out`` is a dict it
    receives the encoder's closed-loop reconstructions (cropped), keyed by
    frame index: the decoder must reproduce these bit-exactly.
    """
    _check_container_config(cfg)
    n = len(seq.frames)
    if n == 0:
        raise CodecError("cannot encode an empty sequence")
    indices = sorted(st.frame_index for st in schedule.steps)
    if indices != list(range(n)):
        raise ScheduleError(f"schedule covers frames {indices[:3]}..{indices[-1:]} but sequence has {n}")
    for f in seq.frames:
        check_image(f)
    oh, ow = seq.frames[0].shape[:2]
    pixels = float(oh * ow)
    padded = [pad_to_multiple(f, PAD_MULTIPLE) for f in seq.frames]
    buffer = DecodedFrameBuffer()
    chunks = []
    report = RateReport(orig_width=ow, orig_height=oh)
    for step in schedule.steps:
        x = padded[step.frame_index].image
        if step.frame_type == "I":
            streams, recon = encode_i(x, cfg)
        elif step.frame_type == "P":
            streams, recon = encode_p(x, buffer.get(step.ref_left), cfg)
        else:
            streams, recon = encode_b(x, buffer.get(step.ref_left), buffer.get(step.ref_right), step.t, cfg)
        CodedFrameData(streams=streams, reconstruction=recon).validate(step.frame_type)
        buffer.insert(step.frame_index, recon)
        chunk = FrameChunk(frame_index=step.frame_index, frame_type=step.frame_type, streams=streams)
        chunks.append(chunk)
        cropped = recon[:oh, :ow]
        if recon_out is not None:
            recon_out[step.frame_index] = cropped.copy()
        mse = float(np.mean((cropped - seq.frames[step.frame_index]) ** 2))
        psnr = 10.0 * math.log10(1.0 / mse) if mse > 0 else math.inf
        report.frames.append(
            FrameStats(
                frame_index=step.frame_index,
                frame_type=step.frame_type,
                bits_image=8.0 * len(streams.get("image", b"")),
                bits_flow=8.0 * len(streams.get("flow", b"")),
                bits_residual=8.0 * len(streams.get("residual", b"")),
                bpp=8.0 * chunk.serialized_size() / pixels,
                mse=mse,
                psnr=psnr,
            )
        )
    container = BitstreamContainer(
        width=ow,
        height=oh,
        frame_count=n,
        gop_size=schedule.gop_size,
        structure=schedule.structure,
        order=schedule.order,
        beta_index=cfg.beta_index,
        chunks=chunks,
    )
    return container, report


def decode_video(container: BitstreamContainer) -> VideoSequence:
    """Mirror of encode_video: rebuilds the schedule from the header, decodes
    chunks strictly in order, and crops reconstructions to the original size."""
    schedule = build_schedule(container.frame_count, container.gop_size, container.structure, container.order)
    if len(schedule.steps) != len(container.chunks):
        raise ContainerError("chunk count does not match the schedule")
    cfg = CoderConfig.from_beta_index(container.beta_index)
    buffer = DecodedFrameBuffer()
    for step, chunk in zip(schedule.steps, container.chunks):
        if chunk.frame_index != step.frame_index or chunk.frame_type != step.frame_type:
            raise ContainerError(
                f"chunk order mismatch: expected frame {step.frame_index} ({step.frame_type}), "
                f"found frame {chunk.frame_index} ({chunk.frame_type})"
            )
        if step.frame_type == "I":
            if "image" not in chunk.streams:
                raise ContainerError(f"I-frame chunk {chunk.frame_index} lacks an image stream")
            ph = -(-container.height // PAD_MULTIPLE) * PAD_MULTIPLE
            pw = -(-container.width // PAD_MULTIPLE) * PAD_MULTIPLE
            recon = ImageCoder(cfg).decode(chunk.streams["image"], ph, pw, 3)
        else:
            if "residual" not in chunk.streams:
                raise ContainerError(f"inter chunk {chunk.frame_index} lacks a residual stream")
            if step.frame_type == "P":
                ref = buffer.get(step.ref_left)
            else:
                ref = interpolate_references(buffer.get(step.ref_left), buffer.get(step.ref_right), step.t)
            recon = decode_p_streams(chunk.streams, ref, cfg)
        buffer.insert(chunk.frame_index, recon)
    frames = []
    for i in range(container.frame_count):
        frames.append(
            crop_to_original(
                PaddedImage(image=buffer.get(i), orig_height=container.height, orig_width=container.width)
            )
        )
    return VideoSequence(frames=frames)


def rd_objective(report: RateReport, beta: float) -> float:
    """Rate-distortion objective: summed MSE plus beta times the summed
    per-stream bits-per-pixel, grouped by frame type (intra: image stream;
    inter: flow + residual streams)."""
    pixels = float(report.orig_width * report.orig_height)
    if pixels <= 0:
        raise ValueError("report lacks original dimensions")
    d_term = sum(f.mse for f in report.frames)
    r_term = 0.0
    for f in report.frames:
        if f.frame_type == "I":
            r_term += f.bits_image / pixels
        else:
            r_term += (f.bits_flow + f.bits_residual) / pixels
    return d_term + beta * r_term
