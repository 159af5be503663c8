"""Wire frame codec.

Header layout, little-endian, 21 bytes total:
magic "THRI", channel_id u32, sender_worker u32, sequence u32, flags u8,
payload_length u32, then the payload bytes. Flag bit 0 marks the last
frame of a (channel, sender, receiver) triple and must carry an empty
payload; flag bit 1 is an internal abort broadcast.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from thrillette.errors import ProtocolError

MAGIC = b"THRI"
_HEADER = struct.Struct("<4sIIIBI")
HEADER_SIZE = _HEADER.size

FLAG_EOC = 0x01
FLAG_ABORT = 0x02

# One logical channel is reserved for collectives; streams allocate
# logical channels below it. The wire channel multiplexes the logical id
# with the destination's local worker id.
COLLECTIVE_CHANNEL = 0x00FFFFFF


@dataclass(frozen=True)
class MessageFrame:
    channel_id: int
    sender_worker: int
    sequence: int
    flags: int = 0
    payload: bytes = b""

    def encode(self) -> bytes:
        return encode_header(
            self.channel_id, self.sender_worker, self.sequence, self.flags,
            len(self.payload)) + self.payload


def encode_header(channel_id: int, sender: int, sequence: int, flags: int,
                  payload_length: int) -> bytes:
    return _HEADER.pack(MAGIC, channel_id, sender, sequence, flags, payload_length)


def decode_header(buf, offset: int = 0):
    """Parse one header; returns (channel_id, sender, sequence, flags, payload_length)."""
    magic, channel_id, sender, sequence, flags, length = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise ProtocolError("bad frame magic %r" % magic)
    if flags & FLAG_EOC and length != 0:
        raise ProtocolError("end-of-channel frame with %d payload bytes" % length)
    return channel_id, sender, sequence, flags, length


def decode(buf, offset: int = 0) -> tuple[MessageFrame, int]:
    """Parse one full frame; returns (frame, next_offset)."""
    channel_id, sender, sequence, flags, length = decode_header(buf, offset)
    start = offset + HEADER_SIZE
    payload = bytes(buf[start:start + length])
    if len(payload) != length:
        raise ProtocolError("truncated frame payload")
    return MessageFrame(channel_id, sender, sequence, flags, payload), start + length


def wire_channel(logical_channel: int, dest_local: int, workers_per_host: int) -> int:
    """Multiplex (logical channel, destination local worker) into the u32 field."""
    wire = logical_channel * workers_per_host + dest_local
    if wire > 0xFFFFFFFF:
        raise ProtocolError("channel id %d overflows the wire field" % logical_channel)
    return wire


def unwire_channel(wire: int, workers_per_host: int) -> tuple[int, int]:
    return wire // workers_per_host, wire % workers_per_host
