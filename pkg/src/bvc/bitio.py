"""Little-endian byte packing helpers shared by stream and container formats."""

from __future__ import annotations

import struct

from .errors import StreamError


class ByteWriter:
    def __init__(self):
        self._parts = []

    def bytes(self) -> bytes:
        return b"".join(self._parts)

    def raw(self, data: bytes):
        self._parts.append(bytes(data))

    def u8(self, v: int):
        self._parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self._parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        self._parts.append(struct.pack("<I", v))

    def i32(self, v: int):
        self._parts.append(struct.pack("<i", v))

    def f32(self, v: float):
        self._parts.append(struct.pack("<f", v))

    def varint(self, v: int):
        """Unsigned LEB128."""
        if v < 0:
            raise ValueError("varint needs a non-negative value")
        out = bytearray()
        while True:
            b = v & 0x7F
            v >>= 7
            if v:
                out.append(b | 0x80)
            else:
                out.append(b)
                break
        self._parts.append(bytes(out))

    def svarint(self, v: int):
        """Zigzag-mapped signed LEB128."""
        self.varint((v << 1) ^ (v >> 63) if v < 0 else (v << 1))


class ByteReader:
    """Bounds-checked reader; any overrun raises StreamError (never crashes)."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def raw(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise StreamError(f"truncated stream: wanted {n} bytes at {self.pos}, have {self.remaining()}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def _unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.raw(size))[0]

    def u8(self) -> int:
        return self._unpack("<B")

    def u16(self) -> int:
        return self._unpack("<H")

    def u32(self) -> int:
        return self._unpack("<I")

    def i32(self) -> int:
        return self._unpack("<i")

    def f32(self) -> float:
        return self._unpack("<f")

    def varint(self) -> int:
        shift = 0
        v = 0
        while True:
            if shift > 63:
                raise StreamError("varint too long")
            b = self._unpack("<B")
            v |= (b & 0x7F) << shift
            if not b & 0x80:
                return v
            shift += 7

    def svarint(self) -> int:
        v = self.varint()
        return (v >> 1) ^ -(v & 1)
