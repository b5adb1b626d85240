"""Payload framing: secrets to/from the bit stream carried by the channels.

A frame is one magic byte (0xA5), a 16-bit big-endian byte count, and the
payload bytes, optionally XORed with a keystream. Bits are always consumed
MSB-first, matching the channel multiplexer. The frame is therefore exactly
``24 + 8 * len(secret)`` bits long, which is what capacity planning uses.

The cipher is a pluggable involution over bytes; the default is a
repeating-key XOR. That is a placeholder keystream, not real cryptography:
deployments that need confidentiality should pass a proper stream cipher via
the ``cipher`` argument.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

from .errors import ToolkitError

MAGIC_BYTE = 0xA5
MAX_PAYLOAD_BYTES = 0xFFFF
HEADER_BITS = 24


class PayloadTooLarge(ToolkitError):
    """Secret exceeds the 16-bit length field."""


class BadMagic(ToolkitError):
    """First frame byte is not 0xA5: wrong channel config, or no hidden data."""


class Truncated(ToolkitError):
    """Fewer bits available than the frame header promises."""


class BitStream:
    """An ordered bit sequence with a read cursor.

    Reads consume from the cursor; ``read(n, pad=True)`` keeps returning
    zero bits past the end (the deframer ignores bits beyond the frame, so
    zero-padding a tail is always safe).
    """

    __slots__ = ("_bits", "_cursor")

    def __init__(self, bits: Iterable[int] = ()) -> None:
        self._bits = []
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            self._bits.append(int(b))
        self._cursor = 0

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitStream":
        stream = cls()
        stream._bits = [(byte >> k) & 1 for byte in data for k in range(7, -1, -1)]
        return stream

    def to_bytes(self) -> bytes:
        """Pack MSB-first; a partial final byte is zero-padded."""
        out = bytearray()
        for i in range(0, len(self._bits), 8):
            chunk = self._bits[i : i + 8]
            chunk += [0] * (8 - len(chunk))
            out.append(_bits_to_int(chunk))
        return bytes(out)

    @property
    def bits(self) -> list[int]:
        return list(self._bits)

    @property
    def cursor(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        return len(self._bits) - self._cursor

    def read(self, n: int, *, pad: bool = False) -> list[int]:
        take = self._bits[self._cursor : self._cursor + n]
        if len(take) < n:
            if not pad:
                raise ValueError(f"read of {n} bits past end of stream")
            take = take + [0] * (n - len(take))
        self._cursor = min(self._cursor + n, len(self._bits))
        return take

    def extend(self, bits: Iterable[int]) -> None:
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            self._bits.append(int(b))

    def __len__(self) -> int:
        return len(self._bits)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BitStream):
            return self._bits == other._bits
        if isinstance(other, (list, tuple)):
            return self._bits == list(other)
        return NotImplemented

    def __repr__(self) -> str:
        shown = "".join(str(b) for b in self._bits[:32])
        tail = "..." if len(self._bits) > 32 else ""
        return f"BitStream({shown}{tail}, len={len(self._bits)}, cursor={self._cursor})"


def _bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def xor_keystream(data: bytes, key: bytes) -> bytes:
    """Repeating-key XOR; its own inverse."""
    if not key:
        raise ValueError("key must be non-empty")
    return bytes(b ^ key[i % len(key)] for i, b in enumerate(data))


def frame_payload(
    secret: bytes,
    key: bytes | None = None,
    cipher: Callable[[bytes, bytes], bytes] = xor_keystream,
) -> BitStream:
    """Wrap a secret in a length-prefixed frame, MSB-first bit-serialized."""
    if len(secret) > MAX_PAYLOAD_BYTES:
        raise PayloadTooLarge(f"secret is {len(secret)} bytes, limit {MAX_PAYLOAD_BYTES}")
    body = cipher(bytes(secret), key) if key is not None else bytes(secret)
    header = bytes([MAGIC_BYTE, len(secret) >> 8, len(secret) & 0xFF])
    return BitStream.from_bytes(header + body)


def deframe_payload(
    bits: BitStream | Sequence[int],
    key: bytes | None = None,
    cipher: Callable[[bytes, bytes], bytes] = xor_keystream,
) -> bytes:
    """Inverse of :func:`frame_payload`; bits beyond the frame are ignored."""
    seq = bits.bits if isinstance(bits, BitStream) else [int(b) for b in bits]
    if len(seq) < HEADER_BITS:
        raise Truncated(f"need {HEADER_BITS} header bits, have {len(seq)}")
    magic = _bits_to_int(seq[0:8])
    if magic != MAGIC_BYTE:
        raise BadMagic(f"frame magic is 0x{magic:02x}, expected 0x{MAGIC_BYTE:02x}")
    length = _bits_to_int(seq[8:24])
    need = HEADER_BITS + 8 * length
    if len(seq) < need:
        raise Truncated(f"frame promises {length} payload bytes ({need} bits), stream has {len(seq)}")
    data = bytes(_bits_to_int(seq[24 + 8 * i : 32 + 8 * i]) for i in range(length))
    return cipher(data, key) if key is not None else data
