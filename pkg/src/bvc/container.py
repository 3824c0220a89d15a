"""Binary bitstream container: a fixed header plus one chunk per coding step.

Layout (little-endian throughout)::

    header: magic "BEPC" | version u8 | width u16 | height u16 |
            frame_count u32 | gop_size u16 | structure u8 | order u8 |
            beta_index u8
    chunk:  frame_index u32 | frame_type u8 | n_streams u8 |
            per stream: kind u8 | byte_length u32 | payload

Chunks appear in schedule order so decoding is strictly sequential. Width
and height are the ORIGINAL (pre-padding) dimensions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .bitio import ByteReader
from .errors import ContainerError, StreamError

MAGIC = b"BEPC"
VERSION = 1

_HEADER_FMT = "<4sBHHIHBBB"
HEADER_SIZE = struct.calcsize(_HEADER_FMT)

STRUCTURE_CODES = {"ibi": 0, "ibp": 1}
ORDER_CODES = {"sequential": 0, "hierarchical": 1}
FRAME_TYPE_CODES = {"I": 0, "P": 1, "B": 2}
STREAM_KIND_CODES = {"image": 0, "flow": 1, "residual": 2}

_STRUCTURE_NAMES = {v: k for k, v in STRUCTURE_CODES.items()}
_ORDER_NAMES = {v: k for k, v in ORDER_CODES.items()}
_FRAME_TYPE_NAMES = {v: k for k, v in FRAME_TYPE_CODES.items()}
_STREAM_KIND_NAMES = {v: k for k, v in STREAM_KIND_CODES.items()}


@dataclass
class FrameChunk:
    frame_index: int
    frame_type: str
    streams: dict = field(default_factory=dict)  # kind name -> serialized stream bytes

    def serialized_size(self) -> int:
        return 6 + sum(5 + len(v) for v in self.streams.values())


@dataclass
class BitstreamContainer:
    width: int
    height: int
    frame_count: int
    gop_size: int
    structure: str
    order: str
    beta_index: int
    chunks: list = field(default_factory=list)

    def serialize(self) -> bytes:
        parts = [
            struct.pack(
                _HEADER_FMT,
                MAGIC,
                VERSION,
                self.width,
                self.height,
                self.frame_count,
                self.gop_size,
                STRUCTURE_CODES[self.structure],
                ORDER_CODES[self.order],
                self.beta_index,
            )
        ]
        for ch in self.chunks:
            parts.append(struct.pack("<IBB", ch.frame_index, FRAME_TYPE_CODES[ch.frame_type], len(ch.streams)))
            for kind, blob in ch.streams.items():
                parts.append(struct.pack("<BI", STREAM_KIND_CODES[kind], len(blob)))
                parts.append(blob)
        return b"".join(parts)

    @classmethod
    def parse(cls, data: bytes) -> "BitstreamContainer":
        if len(data) < HEADER_SIZE:
            raise ContainerError(f"container too short: {len(data)} bytes")
        magic, version, width, height, frame_count, gop_size, s_code, o_code, beta = struct.unpack(
            _HEADER_FMT, data[:HEADER_SIZE]
        )
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ContainerError(f"unsupported version {version}")
        if s_code not in _STRUCTURE_NAMES or o_code not in _ORDER_NAMES:
            raise ContainerError("unknown structure/order code")
        if beta > 7:
            raise ContainerError(f"beta index {beta} out of range")
        out = cls(
            width=width,
            height=height,
            frame_count=frame_count,
            gop_size=gop_size,
            structure=_STRUCTURE_NAMES[s_code],
            order=_ORDER_NAMES[o_code],
            beta_index=beta,
        )
        r = ByteReader(data, offset=HEADER_SIZE)
        try:
            while r.remaining():
                idx = r.u32()
                t_code = r.u8()
                if t_code not in _FRAME_TYPE_NAMES:
                    raise ContainerError(f"unknown frame type code {t_code}")
                n_streams = r.u8()
                streams = {}
                for _ in range(n_streams):
                    k_code = r.u8()
                    if k_code not in _STREAM_KIND_NAMES:
                        raise ContainerError(f"unknown stream kind code {k_code}")
                    length = r.u32()
                    streams[_STREAM_KIND_NAMES[k_code]] = r.raw(length)
                out.chunks.append(
                    FrameChunk(frame_index=idx, frame_type=_FRAME_TYPE_NAMES[t_code], streams=streams)
                )
        except StreamError as exc:
            raise ContainerError(f"truncated container: {exc}") from exc
        if len(out.chunks) != frame_count:
            raise ContainerError(f"header promises {frame_count} chunks, found {len(out.chunks)}")
        return out
