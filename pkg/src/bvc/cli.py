"""Command-line interface.

Subcommands: encode, decode, schedule, eval, bdrate. Defaults reproduce the
canonical configuration: GoP 12, IBP structure, hierarchical B-frame order.

Exit codes: 0 success, 2 invalid arguments, 3 I/O failure, 4 codec failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import kernels
from .bdrate import RdCurve, bd_rate_table
from .coders import CoderConfig
from .errors import CodecError
from .container import BitstreamContainer
from .frames import read_png_sequence, read_raw_yuv, write_png_sequence, write_raw_yuv
from .gop import build_schedule
from .metrics import ms_ssim_detailed, psnr
from .pipeline import decode_video, encode_video

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CODEC = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvc", description="B-frame video codec toolbox")
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode raw YUV420 or a PNG directory to a bitstream")
    enc.add_argument("--input", required=True, help="raw .yuv file or a directory of PNG frames")
    enc.add_argument("--output", required=True, help="bitstream output path")
    enc.add_argument("--width", type=int, help="frame width (required for raw YUV input)")
    enc.add_argument("--height", type=int, help="frame height (required for raw YUV input)")
    enc.add_argument("--fps", type=float, default=30.0, help="frame rate metadata (default 30)")
    enc.add_argument("--frames", type=int, default=None, help="cap the number of frames read")
    enc.add_argument("--gop", type=int, default=12, help="GoP size (default 12)")
    enc.add_argument("--structure", choices=("ibi", "ibp"), default="ibp")
    enc.add_argument("--order", choices=("sequential", "hierarchical"), default="hierarchical")
    enc.add_argument("--beta", type=int, default=4, choices=range(8), metavar="0..7", help="operating point (default 4)")
    enc.add_argument("--no-motion", action="store_true", help="bypass the flow coder (residual-only inter frames)")
    enc.add_argument("--report", help="write the per-frame rate report CSV here")
    enc.add_argument("--threads", type=int, default=0, help="worker thread cap (0 = library default)")

    dec = sub.add_parser("decode", help="decode a bitstream to PNG frames or raw YUV")
    dec.add_argument("--input", required=True, help="bitstream path")
    dec.add_argument("--output", required=True, help="output directory (png) or file (yuv)")
    dec.add_argument("--format", choices=("png", "yuv"), default="png")
    dec.add_argument("--threads", type=int, default=0)

    sch = sub.add_parser("schedule", help="print the coding schedule as JSON lines")
    sch.add_argument("--frames", type=int, required=True)
    sch.add_argument("--gop", type=int, default=12)
    sch.add_argument("--structure", choices=("ibi", "ibp"), default="ibp")
    sch.add_argument("--order", choices=("sequential", "hierarchical"), default="hierarchical")

    ev = sub.add_parser("eval", help="PSNR/MS-SSIM between two PNG directories")
    ev.add_argument("--reference", required=True)
    ev.add_argument("--decoded", required=True)
    ev.add_argument("--output", help="CSV output path (default: stdout)")

    bd = sub.add_parser("bdrate", help="BD-rate between two RD-curve JSON files")
    bd.add_argument("--anchor", required=True)
    bd.add_argument("--test", required=True)
    bd.add_argument("--piecewise", action="store_true", help="piecewise-cubic-hermite fit instead of the cubic polynomial")
    bd.add_argument("--output", help="JSON output path (default: stdout)")
    return p


def _load_input_video(args, parser):
    if os.path.isdir(args.input):
        seq = read_png_sequence(args.input, frame_rate=args.fps)
        if args.frames is not None:
            seq.frames = seq.frames[: args.frames]
        return seq
    if args.width is None or args.height is None:
        parser.error("raw YUV input requires --width and --height")
    return read_raw_yuv(args.input, args.width, args.height, frame_rate=args.fps, max_frames=args.frames)


def cmd_encode(args, parser) -> int:
    if args.threads:
        kernels.set_threads(args.threads)
    seq = _load_input_video(args, parser)
    if not seq.frames:
        parser.error("input contains no frames")
    schedule = build_schedule(len(seq.frames), args.gop, args.structure, args.order)
    cfg = CoderConfig.from_beta_index(args.beta, no_motion=args.no_motion)
    container, report = encode_video(seq, schedule, cfg)
    data = container.serialize()
    with open(args.output, "wb") as fh:
        fh.write(data)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_csv())
    mean_psnr = report.mean_psnr()
    mean_bpp = sum(f.bpp for f in report.frames) / len(report.frames)
    print(
        f"encoded {len(seq.frames)} frames -> {len(data)} bytes "
        f"({mean_bpp:.4f} bpp, {mean_psnr:.2f} dB mean PSNR, backend={kernels.backend_name()})"
    )
    return EXIT_OK


def cmd_decode(args, parser) -> int:
    if args.threads:
        kernels.set_threads(args.threads)
    with open(args.input, "rb") as fh:
        container = BitstreamContainer.parse(fh.read())
    seq = decode_video(container)
    if args.format == "yuv":
        write_raw_yuv(seq, args.output)
    else:
        write_png_sequence(seq, args.output)
    print(f"decoded {len(seq.frames)} frames ({container.width}x{container.height}) -> {args.output}")
    return EXIT_OK


def cmd_schedule(args, parser) -> int:
    schedule = build_schedule(args.frames, args.gop, args.structure, args.order)
    for st in schedule.steps:
        refs = []
        if st.ref_left is not None:
            refs.append(st.ref_left)
        if st.ref_right is not None:
            refs.append(st.ref_right)
        line = {"idx": st.frame_index, "type": st.frame_type, "refs": refs, "t": st.t}
        print(json.dumps(line, separators=(",", ":")))
    return EXIT_OK


def cmd_eval(args, parser) -> int:
    ref = read_png_sequence(args.reference)
    dec = read_png_sequence(args.decoded)
    if len(ref.frames) != len(dec.frames):
        raise CodecError(f"frame count mismatch: {len(ref.frames)} reference vs {len(dec.frames)} decoded")
    lines = ["frame_idx,psnr,msssim"]
    for i, (a, b) in enumerate(zip(ref.frames, dec.frames)):
        p = psnr(a, b)
        m, _ = ms_ssim_detailed(a, b)
        p_str = "inf" if math.isinf(p) else f"{p:.6f}"
        lines.append(f"{i},{p_str},{m:.6f}")
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bdrate(args, parser) -> int:
    with open(args.anchor) as fh:
        anchor = RdCurve.from_json(fh.read())
    with open(args.test) as fh:
        test = RdCurve.from_json(fh.read())
    table = bd_rate_table(anchor, test, piecewise=args.piecewise)
    text = json.dumps(table, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "schedule": cmd_schedule,
    "eval": cmd_eval,
    "bdrate": cmd_bdrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CodecError as exc:
        print(f"codec error: {exc}", file=sys.stderr)
        return EXIT_CODEC


if __name__ == "__main__":
    sys.exit(main())
