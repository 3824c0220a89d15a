"""Frame-type assignment and B-frame coding order for group-of-pictures coding.

A sequence is tiled into windows that share boundary frames: boundaries sit
at 0, G, 2G, ... for GoP size G. Frame 0 is always intra; each later boundary
is coded P (IBP) or I (IBI); interior frames are B-frames traversed either
sequentially or by stack-based bisection (which supports arbitrary window
sizes, not just powers of two plus one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScheduleError

STRUCTURES = ("ibi", "ibp")
ORDERS = ("sequential", "hierarchical")


@dataclass(frozen=True)
class CodingStep:
    frame_index: int
    frame_type: str  # "I" | "P" | "B"
    ref_left: int = None
    ref_right: int = None
    t: float = None


@dataclass
class GopSchedule:
    steps: list = field(default_factory=list)
    gop_size: int = 12
    structure: str = "ibp"
    order: str = "hierarchical"


def hierarchical_order(n: int):
    """Bisection traversal of a window of n frames whose boundaries 0 and n-1
    are already decoded. Returns (index, ref_left, ref_right) in coding
    order. A two-frame window has no interior frames."""
    if n < 2:
        raise ScheduleError(f"hierarchical order needs a window of >= 2 frames, got {n}")
    out = []
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        i = (lo + hi) // 2
        out.append((i, lo, hi))
        if i - lo > 1:
            stack.append((lo, i))
        if hi - i > 1:
            stack.append((i, hi))
    return out


def bisection_depths(n: int):
    """Depth of each interior frame in the bisection tree (root depth 1)."""
    depths = {}
    stack = [(0, n - 1, 1)]
    while stack:
        lo, hi, d = stack.pop()
        if hi - lo < 2:
            continue
        i = (lo + hi) // 2
        depths[i] = d
        if i - lo > 1:
            stack.append((lo, i, d + 1))
        if hi - i > 1:
            stack.append((i, hi, d + 1))
    return depths


def sequential_order(n: int):
    """Left-to-right traversal: each B-frame references its freshly decoded
    left neighbour and the far right boundary."""
    if n < 2:
        raise ScheduleError(f"sequential order needs a window of >= 2 frames, got {n}")
    return [(i, i - 1, n - 1) for i in range(1, n - 1)]


def _interior_steps(left: int, right: int, order: str):
    n = right - left + 1
    fn = hierarchical_order if order == "hierarchical" else sequential_order
    steps = []
    for i, lo, hi in fn(n):
        gl = left + lo
        gr = left + hi
        gi = left + i
        steps.append(
            CodingStep(
                frame_index=gi,
                frame_type="B",
                ref_left=gl,
                ref_right=gr,
                t=(gi - gl) / (gr - gl),
            )
        )
    return steps


def build_schedule(num_frames: int, gop_size: int, structure: str = "ibp", order: str = "hierarchical") -> GopSchedule:
    if num_frames < 1:
        raise ScheduleError("need at least one frame")
    if gop_size < 1:
        raise ScheduleError("gop_size must be >= 1")
    if structure not in STRUCTURES:
        raise ScheduleError(f"structure must be one of {STRUCTURES}")
    if order not in ORDERS:
        raise ScheduleError(f"order must be one of {ORDERS}")
    steps = [CodingStep(frame_index=0, frame_type="I")]
    left = 0
    while left < num_frames - 1:
        right = min(left + gop_size, num_frames - 1)
        if structure == "ibp":
            steps.append(CodingStep(frame_index=right, frame_type="P", ref_left=left))
        else:
            steps.append(CodingStep(frame_index=right, frame_type="I"))
        steps.extend(_interior_steps(left, right, order))
        left = right
    return GopSchedule(steps=steps, gop_size=gop_size, structure=structure, order=order)


def validate_schedule(s: GopSchedule):
    """Check schedule invariants; returns a list of violation strings (empty
    means valid)."""
    violations = []
    if not s.steps:
        return ["schedule has no steps"]
    if s.steps[0].frame_type != "I":
        violations.append(f"first step must be type I, got {s.steps[0].frame_type}")
    seen = set()
    decoded = set()
    for k, st in enumerate(s.steps):
        where = f"step {k} (frame {st.frame_index})"
        if st.frame_index in seen:
            violations.append(f"{where}: frame index appears more than once")
        seen.add(st.frame_index)
        if st.frame_type == "I":
            if st.ref_left is not None or st.ref_right is not None:
                violations.append(f"{where}: I-frames take no references")
        elif st.frame_type == "P":
            if st.ref_left is None or st.ref_right is not None:
                violations.append(f"{where}: P-frames take exactly one (left) reference")
            elif st.ref_left not in decoded:
                violations.append(f"{where}: reference {st.ref_left} not decoded yet")
        elif st.frame_type == "B":
            if st.ref_left is None or st.ref_right is None:
                violations.append(f"{where}: B-frames need both references")
            else:
                if not st.ref_left < st.frame_index < st.ref_right:
                    violations.append(f"{where}: needs ref_left < index < ref_right")
                for r in (st.ref_left, st.ref_right):
                    if r not in decoded:
                        violations.append(f"{where}: reference {r} not decoded yet")
                expect_t = (st.frame_index - st.ref_left) / (st.ref_right - st.ref_left)
                if st.t is None or abs(st.t - expect_t) > 1e-12:
                    violations.append(f"{where}: t must equal {expect_t}")
        else:
            violations.append(f"{where}: unknown frame type {st.frame_type!r}")
        decoded.add(st.frame_index)
    indices = sorted(seen)
    if indices != list(range(indices[0], indices[-1] + 1)) or indices[0] != 0:
        violations.append("frame indices must cover 0..N-1 exactly once")
    return violations
