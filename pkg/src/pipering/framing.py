"""Byte-exact frame format carried over ring pipes.

Pipes are raw byte streams, so the ring needs a message unit. A frame is
an 11-byte fixed header followed by the payload:

    kind            1 byte
    hop_count       4 bytes, big-endian unsigned
    ttl             4 bytes, big-endian unsigned
    payload_length  2 bytes, big-endian unsigned
    payload         payload_length bytes

Integers are network byte order. The explicit payload length allows exact
blocking reads with no sentinels; pipes are reliable in-order local
transports, so there is no checksum.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import BinaryIO

HEADER = struct.Struct("!BIIH")
HEADER_LEN = HEADER.size  # 11
MAX_PAYLOAD = 1024
_U32_MAX = 0xFFFFFFFF


class FrameKind(IntEnum):
    TOKEN = 0x01
    DATA = 0x02
    SHUTDOWN = 0x03


class OversizePayload(ValueError):
    """Payload longer than the permitted maximum."""


class MalformedFrame(Exception):
    """Stream contents that cannot be decoded into a frame.

    Raised on an unknown kind byte, a declared payload length above the
    limit, or a stream that ends mid-frame.
    """


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    hop_count: int = 0
    ttl: int = 0
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not isinstance(self.kind, FrameKind):
            object.__setattr__(self, "kind", FrameKind(self.kind))
        if not 0 <= self.hop_count <= _U32_MAX:
            raise ValueError(f"hop_count out of range: {self.hop_count}")
        if not 0 <= self.ttl <= _U32_MAX:
            raise ValueError(f"ttl out of range: {self.ttl}")
        if len(self.payload) > MAX_PAYLOAD:
            raise OversizePayload(
                f"payload is {len(self.payload)} bytes, limit {MAX_PAYLOAD}"
            )


def encode_frame(frame: Frame, max_payload: int = MAX_PAYLOAD) -> bytes:
    """Serialize a frame to its wire representation."""
    if len(frame.payload) > max_payload:
        raise OversizePayload(
            f"payload is {len(frame.payload)} bytes, limit {max_payload}"
        )
    header = HEADER.pack(int(frame.kind), frame.hop_count, frame.ttl, len(frame.payload))
    return header + frame.payload


def _read_exact(stream: BinaryIO, count: int) -> bytes:
    """Read exactly count bytes, tolerating short reads from pipes."""
    chunks = bytearray()
    while len(chunks) < count:
        piece = stream.read(count - len(chunks))
        if not piece:
            break
        chunks.extend(piece)
    return bytes(chunks)


def decode_frame(stream: BinaryIO, max_payload: int = MAX_PAYLOAD) -> Frame | None:
    """Read one frame from a stream positioned at a frame boundary.

    Returns None at a clean end of stream (zero bytes available at the
    boundary). Raises MalformedFrame on an unknown kind, an oversize
    declared payload length, or truncation inside a frame.
    """
    header = _read_exact(stream, HEADER_LEN)
    if not header:
        return None
    if len(header) < HEADER_LEN:
        raise MalformedFrame(
            f"stream ended inside a header ({len(header)} of {HEADER_LEN} bytes)"
        )
    kind_byte, hop_count, ttl, payload_len = HEADER.unpack(header)
    try:
        kind = FrameKind(kind_byte)
    except ValueError:
        raise MalformedFrame(f"unknown frame kind 0x{kind_byte:02X}") from None
    if payload_len > max_payload:
        raise MalformedFrame(
            f"declared payload length {payload_len} exceeds limit {max_payload}"
        )
    payload = _read_exact(stream, payload_len)
    if len(payload) < payload_len:
        raise MalformedFrame(
            f"stream ended inside a payload ({len(payload)} of {payload_len} bytes)"
        )
    return Frame(kind=kind, hop_count=hop_count, ttl=ttl, payload=payload)
