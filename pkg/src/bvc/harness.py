"""Dataset evaluation: encode/decode across the quantizer ladder, collect
RD curves per video and averaged, and per-frame profiles across the GoP.

Quality aggregation order is frame -> video -> dataset: PSNR/MS-SSIM are
computed per frame, averaged over the frames of each video, then averaged
over videos. Infinite-PSNR frames are reported but excluded from averages
and curve fitting.
"""

from __future__ import annotations

import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bdrate import RdCurve, RdPoint
from .frames import VideoSequence
from .gop import GopSchedule, bisection_depths, build_schedule
from .metrics import ms_ssim_detailed, psnr
from .pipeline import RateReport, decode_video, encode_video

CSV_HEADER = "video,config,frame_idx,frame_type,bpp,psnr,msssim"


@dataclass(frozen=True)
class ScheduleParams:
    gop_size: int = 12
    structure: str = "ibp"
    order: str = "hierarchical"


@dataclass
class VideoResult:
    label: str
    curve: RdCurve
    reports: list = field(default_factory=list)  # one RateReport per config
    rows: list = field(default_factory=list)  # CSV rows (tuples)
    msssim_scales: int = 5


@dataclass
class DatasetReport:
    videos: list = field(default_factory=list)
    average: RdCurve = None
    failures: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for v in self.videos:
            for row in v.rows:
                out.write(",".join(str(x) for x in row) + "\n")
        return out.getvalue()

    def curves_json(self) -> str:
        curves = [v.curve.to_dict() for v in self.videos]
        if self.average is not None:
            curves.append(self.average.to_dict())
        return json.dumps({"curves": curves, "failures": self.failures}, indent=2)


def _finite_mean(values):
    finite = [v for v in values if math.isfinite(v)]
    return sum(finite) / len(finite) if finite else math.inf


def evaluate_video(label: str, seq: VideoSequence, configs, params: ScheduleParams) -> VideoResult:
    points = []
    reports = []
    rows = []
    scales_used = 5
    for cfg in configs:
        schedule = build_schedule(len(seq.frames), params.gop_size, params.structure, params.order)
        container, report = encode_video(seq, schedule, cfg)
        decoded = decode_video(container)
        frame_psnr = []
        frame_msssim = []
        for idx in range(len(seq.frames)):
            p = psnr(seq.frames[idx], decoded.frames[idx])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                m, scales_used = ms_ssim_detailed(seq.frames[idx], decoded.frames[idx])
            frame_psnr.append(p)
            frame_msssim.append(m)
        by_index = {f.frame_index: f for f in report.frames}
        for idx in range(len(seq.frames)):
            f = by_index[idx]
            rows.append(
                (label, cfg.beta_index, idx, f.frame_type, f"{f.bpp:.8f}", frame_psnr[idx], f"{frame_msssim[idx]:.6f}")
            )
        mean_bpp = float(np.mean([f.bpp for f in report.frames]))
        points.append(RdPoint(bpp=mean_bpp, psnr=_finite_mean(frame_psnr), msssim=float(np.mean(frame_msssim))))
        reports.append(report)
    points.sort(key=lambda p: p.bpp)
    return VideoResult(
        label=label,
        curve=RdCurve(points=points, label=label),
        reports=reports,
        rows=rows,
        msssim_scales=scales_used,
    )


def run_dataset(videos, configs, params: ScheduleParams = ScheduleParams(), output_dir=None, threads: int = 1) -> DatasetReport:
    """Evaluate every (video, config) pair; per-video failures are isolated
    and recorded so the run continues. ``videos`` is a list of
    (label, VideoSequence) pairs."""
    report = DatasetReport()
    if not videos:
        warnings.warn("empty dataset: nothing to evaluate", stacklevel=2)
    else:

        def job(item):
            label, seq = item
            return label, evaluate_video(label, seq, configs, params)

        results = {}
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {pool.submit(job, item): item[0] for item in videos}
                for fut, label in futures.items():
                    try:
                        _, res = fut.result()
                        results[label] = res
                    except Exception as exc:  # noqa: BLE001 - isolation by design
                        report.failures[label] = f"{type(exc).__name__}: {exc}"
        else:
            for item in videos:
                try:
                    label, res = job(item)
                    results[label] = res
                except Exception as exc:  # noqa: BLE001 - isolation by design
                    report.failures[item[0]] = f"{type(exc).__name__}: {exc}"
        report.videos = [results[label] for label, _ in videos if label in results]
    if report.videos:
        n_cfg = min(len(v.curve.points) for v in report.videos)
        avg_points = []
        for i in range(n_cfg):
            avg_points.append(
                RdPoint(
                    bpp=float(np.mean([v.curve.points[i].bpp for v in report.videos])),
                    psnr=float(np.mean([v.curve.points[i].psnr for v in report.videos])),
                    msssim=float(np.mean([v.curve.points[i].msssim for v in report.videos])),
                )
            )
        avg_points.sort(key=lambda p: p.bpp)
        report.average = RdCurve(points=avg_points, label="average")
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, "metrics.csv"), "w") as fh:
            fh.write(report.to_csv())
        with open(os.path.join(output_dir, "curves.json"), "w") as fh:
            fh.write(report.curves_json())
    return report


# ---------------------------------------------------------------------------
# Per-frame profiles
# ---------------------------------------------------------------------------


def profile_by_position(report: RateReport, gop_size: int):
    """Average bpp/PSNR at each GoP-relative position (boundaries at 0)."""
    buckets = {}
    for f in report.frames:
        pos = f.frame_index % gop_size
        buckets.setdefault(pos, []).append(f)
    out = []
    for pos in sorted(buckets):
        rows = buckets[pos]
        out.append(
            {
                "position": pos,
                "frame_type": rows[0].frame_type,
                "mean_bpp": float(np.mean([r.bpp for r in rows])),
                "mean_psnr": _finite_mean([r.psnr for r in rows]),
            }
        )
    return out


def mean_bits_by_depth(report: RateReport, schedule: GopSchedule):
    """Mean coded bits of B-frames grouped by bisection depth (depth 1 is the
    widest split). Only meaningful for hierarchical schedules."""
    n = max(st.frame_index for st in schedule.steps) + 1
    depth_of = {}
    left = 0
    while left < n - 1:
        right = min(left + schedule.gop_size, n - 1)
        for local_idx, d in bisection_depths(right - left + 1).items():
            depth_of[left + local_idx] = d
        left = right
    by_index = {f.frame_index: f for f in report.frames}
    buckets = {}
    for st in schedule.steps:
        if st.frame_type != "B":
            continue
        f = by_index[st.frame_index]
        bits = f.bits_image + f.bits_flow + f.bits_residual
        buckets.setdefault(depth_of[st.frame_index], []).append(bits)
    return {d: float(np.mean(v)) for d, v in sorted(buckets.items())}
