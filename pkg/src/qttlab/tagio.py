"""QTT1 binary tag-file format.

Little-endian header followed by the raw tick array:

    offset  size  field
    0       4     magic "QTT1"
    4       2     version (u16, currently 1)
    6       2     channel (u16, 1..4 for D1..D4)
    8       4     lsb (u32, femtoseconds per tick)
    12      8     record epoch (i64, seconds)
    20      8     tag count (u64)
    28      8*n   tags (i64 ticks, ascending)
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .detect import TimeTagStream
from .errors import TagFileError

__all__ = ["write_tags", "read_tags", "MAGIC", "VERSION"]

MAGIC = b"QTT1"
VERSION = 1
_HEADER = struct.Struct("<4sHHIqQ")

_CHANNEL_IDS = {"D1": 1, "D2": 2, "D3": 3, "D4": 4}
_CHANNEL_NAMES = {v: k for k, v in _CHANNEL_IDS.items()}


def _channel_id(channel: str) -> int:
    try:
        return _CHANNEL_IDS[channel]
    except KeyError:
        raise TagFileError(f"channel must be one of {sorted(_CHANNEL_IDS)}, got {channel!r}")


def write_tags(stream: TimeTagStream, sink) -> None:
    """Write a stream to a path or binary file object."""
    lsb_fs = stream.lsb * 1000.0
    if abs(lsb_fs - round(lsb_fs)) > 1e-9 or not 0 < round(lsb_fs) < 2 ** 32:
        raise TagFileError(f"lsb {stream.lsb} ps is not a whole femtosecond count")
    header = _HEADER.pack(MAGIC, VERSION, _channel_id(stream.channel),
                          int(round(lsb_fs)), int(stream.record_epoch),
                          len(stream))
    payload = np.ascontiguousarray(stream.tags, dtype="<i8").tobytes()
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as f:
            f.write(header)
            f.write(payload)
    else:
        sink.write(header)
        sink.write(payload)


def read_tags(source) -> TimeTagStream:
    """Read a stream from a path, bytes, or binary file object.

    Raises TagFileError on bad magic/version, truncation, count mismatch,
    or non-ascending tags.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as f:
            data = f.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()

    if len(data) < _HEADER.size:
        raise TagFileError("truncated file: header incomplete")
    magic, version, channel_id, lsb_fs, epoch, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TagFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise TagFileError(f"unsupported version {version}")
    if channel_id not in _CHANNEL_NAMES:
        raise TagFileError(f"unknown channel id {channel_id}")
    if lsb_fs == 0:
        raise TagFileError("lsb must be positive")
    expected = _HEADER.size + 8 * count
    if len(data) < expected:
        raise TagFileError(f"truncated file: header declares {count} tags, "
                           f"payload holds {(len(data) - _HEADER.size) // 8}")
    if len(data) > expected:
        raise TagFileError("trailing bytes after declared tag payload")
    tags = np.frombuffer(data, dtype="<i8", count=count, offset=_HEADER.size)
    if tags.size and np.any(np.diff(tags) < 0):
        raise TagFileError("tags are not ascending")
    return TimeTagStream(channel=_CHANNEL_NAMES[channel_id],
                         tags=tags.astype(np.int64), lsb=lsb_fs / 1000.0,
                         record_epoch=int(epoch))
