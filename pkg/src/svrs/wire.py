"""Binary framing for media frames.

One layout serves both the WebSocket binary channel and the recording
body:

===========  =====  ==============================================
field        size   meaning
===========  =====  ==============================================
record type  1      0x01 (media frame)
stream kind  1      0=Surround360 1=Site 2=Vitals 3=GuideView 4=Audio
seq          8 LE   per-stream sequence number
ts_us        8 LE   session monotonic clock, microseconds
key flag     1      1 if the frame is self-contained
ct length    2 LE   content-type byte length
ct           var    content-type, UTF-8
payload len  4 LE   payload byte length
payload      var    opaque payload, at most 8 MiB
===========  =====  ==============================================

Recordings insert an 8-byte offset between the record type and the rest;
``encode_frame_body``/``decode_frame_body`` handle the part after the type
byte so both containers share the code.
"""

from __future__ import annotations

import struct

from .model import CODE_STREAM, MAX_PAYLOAD, MediaFrame, ModelError, STREAM_CODE

FRAME_TYPE = 0x01

_HDR = struct.Struct("<BQQB")  # stream code, seq, ts_us, key


class WireError(ValueError):
    """Bytes do not parse as a frame: corrupt peer or file."""


def encode_frame_body(f: MediaFrame) -> bytes:
    ct = f.content_type.encode("utf-8")
    return b"".join(
        (
            _HDR.pack(STREAM_CODE[f.stream], f.seq, f.ts_us, 1 if f.key else 0),
            struct.pack("<H", len(ct)),
            ct,
            struct.pack("<I", len(f.payload)),
            f.payload,
        )
    )


def encode_frame(f: MediaFrame) -> bytes:
    return bytes([FRAME_TYPE]) + encode_frame_body(f)


def decode_frame_body(buf: bytes, pos: int = 0) -> tuple[MediaFrame, int]:
    """Parse a frame body at ``pos``; returns (frame, next position)."""
    try:
        code, seq, ts_us, key = _HDR.unpack_from(buf, pos)
        pos += _HDR.size
        (ct_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        if pos + ct_len > len(buf):
            raise WireError("truncated content type")
        ct = bytes(buf[pos : pos + ct_len]).decode("utf-8")
        pos += ct_len
        (p_len,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        if p_len > MAX_PAYLOAD:
            raise WireError(f"payload length {p_len} exceeds limit")
        if pos + p_len > len(buf):
            raise WireError("truncated payload")
        payload = bytes(buf[pos : pos + p_len])
        pos += p_len
    except struct.error as exc:
        raise WireError(str(exc)) from None
    except UnicodeDecodeError as exc:
        raise WireError(f"bad content type: {exc}") from None
    if code not in CODE_STREAM:
        raise WireError(f"unknown stream code {code}")
    try:
        frame = MediaFrame(
            stream=CODE_STREAM[code],
            seq=seq,
            ts_us=ts_us,
            key=bool(key),
            content_type=ct,
            payload=payload,
        )
    except ModelError as exc:
        raise WireError(str(exc)) from None
    return frame, pos


def decode_frame(buf: bytes) -> MediaFrame:
    """Parse one complete frame message (type byte included)."""
    if not buf or buf[0] != FRAME_TYPE:
        raise WireError("not a frame message")
    frame, pos = decode_frame_body(buf, 1)
    if pos != len(buf):
        raise WireError(f"{len(buf) - pos} trailing bytes after frame")
    return frame
