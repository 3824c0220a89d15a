"""Rate-distortion curves and Bjontegaard delta-rate between two of them.

The default fit is the classic one: a cubic polynomial of log10(rate) as a
function of quality, integrated over the overlapping quality interval; the
result is the average rate ratio minus one, in percent (negative = the test
curve saves rate). A piecewise-cubic-hermite variant is available behind a
flag for sensitivity checks.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr: float
    msssim: float = 0.0

    def __post_init__(self):
        if self.bpp < 0:
            raise ValueError("bpp must be non-negative")
        if not 0.0 <= self.msssim <= 1.0:
            raise ValueError("msssim must lie in [0, 1]")


@dataclass
class RdCurve:
    points: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if len(self.points) >= 2:
            bpps = [p.bpp for p in self.points]
            if any(b2 <= b1 for b1, b2 in zip(bpps, bpps[1:])):
                raise ValueError("curve points must be sorted by strictly increasing bpp")

    def rates(self) -> np.ndarray:
        return np.array([p.bpp for p in self.points], dtype=np.float64)

    def quality(self, metric: str = "psnr") -> np.ndarray:
        return np.array([getattr(p, metric) for p in self.points], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "points": [{"bpp": p.bpp, "psnr": p.psnr, "msssim": p.msssim} for p in self.points],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RdCurve":
        pts = [RdPoint(bpp=p["bpp"], psnr=p["psnr"], msssim=p.get("msssim", 0.0)) for p in d["points"]]
        pts.sort(key=lambda p: p.bpp)
        return cls(points=pts, label=d.get("label", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RdCurve":
        return cls.from_dict(json.loads(text))


def _prepare(curve: RdCurve, metric: str):
    rate = curve.rates()
    qual = curve.quality(metric)
    keep = np.isfinite(qual) & (rate > 0)
    rate = rate[keep]
    qual = qual[keep]
    if rate.size < 4:
        raise ValueError(f"bd_rate needs >= 4 finite points per curve, have {rate.size}")
    if np.any(np.diff(qual) <= 0):
        warnings.warn("quality is not monotone in rate; proceeding on sorted data", stacklevel=3)
        order = np.argsort(qual, kind="stable")
        qual = qual[order]
        rate = rate[order]
    return qual, np.log10(rate)


def bd_rate(anchor: RdCurve, test: RdCurve, metric: str = "psnr", piecewise: bool = False) -> float:
    """Average rate difference of ``test`` against ``anchor`` at equal quality,
    in percent; negative numbers mean the test curve saves rate."""
    qa, ra = _prepare(anchor, metric)
    qt, rt = _prepare(test, metric)
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if hi <= lo:
        raise ValueError(f"no overlapping quality range: [{qa.min()}, {qa.max()}] vs [{qt.min()}, {qt.max()}]")
    if piecewise:
        samples, step = np.linspace(lo, hi, num=200, retstep=True)
        va = PchipInterpolator(qa, ra)(samples)
        vt = PchipInterpolator(qt, rt)(samples)
        int_a = np.trapezoid(va, dx=step)
        int_t = np.trapezoid(vt, dx=step)
    else:
        pa = np.polyfit(qa, ra, 3)
        pt = np.polyfit(qt, rt, 3)
        ia = np.polyint(pa)
        it = np.polyint(pt)
        int_a = np.polyval(ia, hi) - np.polyval(ia, lo)
        int_t = np.polyval(it, hi) - np.polyval(it, lo)
    delta = (int_t - int_a) / (hi - lo)
    return float(100.0 * (10.0**delta - 1.0))


def bd_rate_table(anchor: RdCurve, test: RdCurve, piecewise: bool = False) -> dict:
    """BD-rate for both metrics, keyed by the (anchor, test) label pair."""
    key = f"{anchor.label or 'anchor'}->{test.label or 'test'}"
    entry = {}
    for metric in ("psnr", "msssim"):
        try:
            entry[metric] = bd_rate(anchor, test, metric=metric, piecewise=piecewise)
        except ValueError as exc:
            entry[metric] = None
            entry[f"{metric}_error"] = str(exc)
    return {key: entry}
