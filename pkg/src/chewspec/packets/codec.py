"""MSB-first bit reading and writing over byte strings, on top of bitstring."""

from typing import Optional

import bitstring


def _uint(value: int, width: int) -> bitstring.Bits:
    return bitstring.Bits(uint=value % (1 << width), length=width)


class BitReader:
    def __init__(self, data: bytes):
        self.stream = bitstring.ConstBitStream(bytes=bytes(data))

    @property
    def pos(self) -> int:
        return self.stream.pos

    @property
    def remaining(self) -> int:
        return self.stream.len - self.stream.pos

    @property
    def aligned(self) -> bool:
        return self.stream.pos % 8 == 0

    def read_uint(self, width: int) -> Optional[int]:
        """Next ``width`` bits as an unsigned integer, or None on underrun."""
        if width > self.remaining:
            return None
        return self.stream.read(f"uint:{width}")

    def read_bytes(self, count: int) -> Optional[bytes]:
        if 8 * count > self.remaining:
            return None
        if count == 0:
            return b""
        return self.stream.read(f"bytes:{count}")


class BitWriter:
    def __init__(self) -> None:
        self.stream = bitstring.BitStream()

    @property
    def bits(self) -> int:
        return self.stream.len

    def write_uint(self, value: int, width: int) -> None:
        self.stream.append(_uint(value, width))

    def write_bytes(self, data: bytes) -> None:
        self.stream.append(bitstring.Bits(bytes=bytes(data)))

    def to_bytes(self) -> bytes:
        if self.stream.len % 8:
            raise ValueError(
                f"{self.stream.len} bits written; not a whole number of bytes"
            )
        return self.stream.tobytes()


def set_bits(data: bytes, offset: int, width: int, value: int) -> bytes:
    """Copy of ``data`` with ``width`` bits at ``offset`` replaced by ``value``."""
    stream = bitstring.BitStream(bytes=bytes(data))
    stream.overwrite(_uint(value, width), offset)
    return stream.tobytes()
