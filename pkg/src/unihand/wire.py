"""Tagged, length-prefixed binary framing for every simulator-carried message.

Frame: tag(1) || flow(4) || len(4) || payload, all integers big-endian. The
flow field is the session hint: parties map it to a local session, and the
adversary may rewrite it (that is part of the attack surface).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum


class MsgTag(IntEnum):
    M1 = 1
    M2 = 2
    M3 = 3
    M4 = 4
    M5 = 5
    M6 = 6
    M7 = 7
    ACK_PRIME = 8
    ACK_DPRIME = 9
    HO_M1 = 10
    HO_M2 = 11
    HO_M3 = 12


@dataclass(frozen=True)
class WireMessage:
    tag: MsgTag
    flow: int
    payload: bytes

    def encode(self) -> bytes:
        return (
            struct.pack(">BII", int(self.tag), self.flow, len(self.payload))
            + self.payload
        )

    @classmethod
    def decode(cls, data: bytes) -> "WireMessage":
        if len(data) < 9:
            raise ValueError("short frame")
        tag_raw, flow, plen = struct.unpack(">BII", data[:9])
        if len(data) != 9 + plen:
            raise ValueError("frame length mismatch")
        return cls(MsgTag(tag_raw), flow, data[9:])


def pack_fields(*fields: bytes) -> bytes:
    """len(4)-prefixed concatenation; unambiguous for variable-size fields."""
    return b"".join(struct.pack(">I", len(f)) + f for f in fields)


def unpack_fields(data: bytes, count: int) -> list[bytes]:
    """Exactly `count` fields consuming all of data, else ValueError."""
    fields = []
    offset = 0
    for _ in range(count):
        if len(data) < offset + 4:
            raise ValueError("truncated field length")
        (flen,) = struct.unpack(">I", data[offset : offset + 4])
        offset += 4
        if len(data) < offset + flen:
            raise ValueError("truncated field body")
        fields.append(data[offset : offset + flen])
        offset += flen
    if offset != len(data):
        raise ValueError("trailing bytes after fields")
    return fields


def field_offset(data: bytes, index: int) -> tuple[int, int]:
    """(start, length) of the index-th packed field inside data; lets the
    adversary compute byte ranges for surgical modification."""
    offset = 0
    current = 0
    while offset + 4 <= len(data):
        (flen,) = struct.unpack(">I", data[offset : offset + 4])
        start = offset + 4
        if start + flen > len(data):
            break
        if current == index:
            return start, flen
        offset = start + flen
        current += 1
    raise ValueError(f"no field {index}")
