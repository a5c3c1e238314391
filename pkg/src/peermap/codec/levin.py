"""Levin frame parsing: the outer envelope of Monero P2P traffic.

A frame is a 33-byte header followed by ``payload_length`` bytes of body.
Header layout, little-endian throughout:

    bytes  0-7   signature 01 21 01 01 01 01 01 01
    bytes  8-15  payload_length  (u64)
    byte   16    expect_response (bool)
    bytes 17-20  command         (u32)
    bytes 21-24  return_code     (i32)
    bytes 25-28  flags           (u32; bit 0 request, bit 1 response)
    bytes 29-32  protocol version (u32)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import CodecError

LEVIN_SIGNATURE = bytes.fromhex("0121010101010101")
HEADER_LENGTH = 33
DEFAULT_MAX_PAYLOAD = 100 * 1024 * 1024

COMMAND_HANDSHAKE = 1001
COMMAND_TIMED_SYNC = 1002
PEER_COMMANDS = frozenset({COMMAND_HANDSHAKE, COMMAND_TIMED_SYNC})

FLAG_REQUEST = 0x01
FLAG_RESPONSE = 0x02
PROTOCOL_VERSION = 1

_HEADER_STRUCT = struct.Struct("<8sQBIiII")


class FrameSyncError(CodecError):
    """Stream position does not hold a frame signature."""

    def __init__(self, offset: int, found: bytes):
        self.offset = offset
        super().__init__(
            f"no frame signature at byte offset {offset} (found {found.hex()!r})"
        )


class PayloadTooLargeError(CodecError):
    def __init__(self, offset: int, length: int, cap: int):
        self.offset = offset
        super().__init__(
            f"frame at offset {offset} declares {length} payload bytes, cap is {cap}"
        )


@dataclass(frozen=True)
class LevinHeader:
    payload_length: int
    expect_response: bool
    command: int
    return_code: int
    flags: int
    version: int


@dataclass(frozen=True)
class PartialFrame:
    """Bytes at the end of a stream that do not complete a frame."""

    offset: int
    available: int
    needed: int


def parse_levin_frames(
    data: bytes, max_payload: int = DEFAULT_MAX_PAYLOAD
) -> tuple[list[tuple[LevinHeader, bytes]], PartialFrame | None]:
    """Split a byte stream into complete frames.

    Returns the complete frames plus a report for any trailing partial
    frame (common when a capture is cut mid-message). Garbage where a
    signature should be raises FrameSyncError with the byte offset, and a
    declared payload above ``max_payload`` raises PayloadTooLargeError;
    both indicate stream corruption rather than truncation.
    """
    frames: list[tuple[LevinHeader, bytes]] = []
    pos = 0
    total = len(data)
    while pos < total:
        if total - pos < HEADER_LENGTH:
            chunk = data[pos:]
            if not chunk.startswith(LEVIN_SIGNATURE[:len(chunk)]):
                raise FrameSyncError(pos, chunk[:8])
            return frames, PartialFrame(pos, total - pos, HEADER_LENGTH)
        sig, length, expect, command, ret, flags, version = _HEADER_STRUCT.unpack_from(data, pos)
        if sig != LEVIN_SIGNATURE:
            raise FrameSyncError(pos, sig)
        if length > max_payload:
            raise PayloadTooLargeError(pos, length, max_payload)
        header = LevinHeader(length, bool(expect), command, ret, flags, version)
        body_start = pos + HEADER_LENGTH
        if body_start + length > total:
            return frames, PartialFrame(pos, total - pos, HEADER_LENGTH + length)
        frames.append((header, data[body_start:body_start + length]))
        pos = body_start + length
    return frames, None


def encode_levin_frame(
    payload: bytes,
    command: int,
    *,
    expect_response: bool = False,
    return_code: int = 0,
    flags: int = FLAG_RESPONSE,
    version: int = PROTOCOL_VERSION,
) -> bytes:
    return _HEADER_STRUCT.pack(
        LEVIN_SIGNATURE,
        len(payload),
        1 if expect_response else 0,
        command,
        return_code,
        flags,
        version,
    ) + payload
