# lunarnet/a2a/framing.py
"""MTU-bounded framing of encoded messages for the RAN control channel.

Every frame starts with a 16-byte big-endian header:

    u64 msg_id | u16 frame index | u16 frame count | u32 CRC-32

The CRC covers the first 12 header bytes and the frame payload.
"""
import struct
import zlib
from typing import Dict, Iterable, List

HEADER = struct.Struct(">QHHI")
HEADER_SIZE = HEADER.size  # 16
MAX_FRAMES = 0xFFFF


class MtuTooSmall(ValueError):
    pass


class ChecksumMismatch(ValueError):
    pass


class IncompleteMessage(ValueError):
    pass


def _checksum(msg_id: int, index: int, count: int, chunk: bytes) -> int:
    return zlib.crc32(HEADER.pack(msg_id, index, count, 0)[:12] + chunk)


def frame_for_control_channel(data: bytes, mtu: int, msg_id: int = 0) -> List[bytes]:
    """Split ``data`` into frames of at most ``mtu`` bytes each."""
    if mtu <= HEADER_SIZE:
        raise MtuTooSmall(f"MTU {mtu} leaves no room after the {HEADER_SIZE}-byte header")
    if not 0 <= msg_id < 2**64:
        raise ValueError(f"Message id must fit in 64 bits, got {msg_id}")
    room = mtu - HEADER_SIZE
    chunks = [data[i:i + room] for i in range(0, len(data), room)] or [b""]
    if len(chunks) > MAX_FRAMES:
        raise ValueError(f"{len(data)} bytes need {len(chunks)} frames, limit is {MAX_FRAMES}")
    count = len(chunks)
    return [
        HEADER.pack(msg_id, index, count, _checksum(msg_id, index, count, chunk)) + chunk
        for index, chunk in enumerate(chunks)
    ]


def reassemble(frames: Iterable[bytes]) -> bytes:
    """Rebuild the payload from frames received in any order."""
    parts: Dict[int, bytes] = {}
    ids = set()
    counts = set()
    for frame in frames:
        if len(frame) < HEADER_SIZE:
            raise IncompleteMessage(f"Frame of {len(frame)} bytes is shorter than its header")
        msg_id, index, count, crc = HEADER.unpack_from(frame)
        chunk = bytes(frame[HEADER_SIZE:])
        if _checksum(msg_id, index, count, chunk) != crc:
            raise ChecksumMismatch(f"Frame {index} of message {msg_id} failed its checksum")
        ids.add(msg_id)
        counts.add(count)
        parts[index] = chunk
    if not parts:
        raise IncompleteMessage("No frames to reassemble")
    if len(ids) != 1 or len(counts) != 1:
        raise IncompleteMessage(f"Frames belong to different messages: ids={sorted(ids)}")
    count = counts.pop()
    missing = [i for i in range(count) if i not in parts]
    if missing:
        raise IncompleteMessage(f"Missing frames {missing} of {count}")
    return b"".join(parts[i] for i in range(count))
