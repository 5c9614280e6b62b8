"""Bit-exact session recording and replay (the .svrs file format).

Layout, byte for byte (all integers little-endian):

* header: magic ``SVRS`` (0x53 0x56 0x52 0x53), u16 version (1), u16
  header-extension length (0 in v1), u64 wallclock start in microseconds
  since the Unix epoch, u8 session-id length, session id (UTF-8);
* records, each: u8 type, u64 monotonic offset in microseconds, body.
  Type 0x01 is a media frame whose body reuses the wire framing after its
  type byte (see :mod:`svrs.wire`); types 0x02 (annotation event) and 0x03
  (signal event) carry u32 length + canonical event bytes;
* trailer: 0xFF, u64 record count, u64 CRC-64/XZ over the records region.

Record offsets never decrease.  Replay emits records in file order and
paces them by offset deltas divided by the speed factor; original offsets
are never re-stamped, which is what makes record -> replay -> re-record
reproduce the body bit for bit.  Annotations made while reviewing a replay
go to a sidecar recording; the source file is never touched.
"""

from __future__ import annotations

import math
import os
import struct
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Union

from . import _kernels
from .events import (
    ANNOTATION_TYPES,
    AnnotationEvent,
    SIGNAL_TYPES,
    SessionEvent,
    decode_event,
    encode_event,
)
from .model import MediaFrame, validate_session_id
from .wire import decode_frame_body, encode_frame_body

MAGIC = b"SVRS"
VERSION = 1

RT_FRAME = 0x01
RT_EVENT = 0x02
RT_SIGNAL = 0x03
RT_TRAILER = 0xFF

_REC_HEAD = struct.Struct("<BQ")  # type, offset_us
_TRAILER_TAIL = struct.Struct("<QQ")  # count, crc64


class RecordingError(Exception):
    pass


class OffsetRegression(RecordingError):
    pass


class StorageFull(RecordingError):
    pass


class ChecksumMismatch(RecordingError):
    pass


class UnsupportedVersion(RecordingError):
    pass


class MalformedRecording(RecordingError):
    pass


@dataclass(frozen=True, slots=True)
class RecordItem:
    rtype: int
    offset_us: int
    frame: Optional[MediaFrame] = None
    event: Optional[SessionEvent] = None

    @property
    def payload(self) -> Union[MediaFrame, SessionEvent]:
        return self.frame if self.rtype == RT_FRAME else self.event


@dataclass(frozen=True, slots=True)
class RecordingInfo:
    path: Path
    session_id: str
    wallclock_start_us: int
    records: int
    counts: dict
    crc64: int


def _translate_oserror(exc: OSError) -> RecordingError:
    import errno

    if exc.errno == errno.ENOSPC:
        return StorageFull(str(exc))
    raise exc


class RecordingWriter:
    """Single-writer appender; every session gets exactly one."""

    def __init__(
        self,
        path: Union[str, Path],
        session_id: str,
        wallclock_start_us: Optional[int] = None,
    ):
        validate_session_id(session_id)
        self.path = Path(path)
        self.session_id = session_id
        self.wallclock_start_us = (
            time.time_ns() // 1000 if wallclock_start_us is None else wallclock_start_us
        )
        self._last_offset = 0
        self._count = 0
        self._crc = _kernels.CRC64_INIT
        self._finalized: Optional[RecordingInfo] = None
        self._counts = {RT_FRAME: 0, RT_EVENT: 0, RT_SIGNAL: 0}
        sid = session_id.encode("utf-8")
        header = MAGIC + struct.pack("<HHQB", VERSION, 0, self.wallclock_start_us, len(sid)) + sid
        try:
            self._fh = open(self.path, "wb")
            self._fh.write(header)
        except OSError as exc:
            raise _translate_oserror(exc) from None

    @property
    def open(self) -> bool:
        return self._finalized is None

    def _append(self, rtype: int, offset_us: int, body: bytes):
        if self._finalized is not None:
            raise RecordingError("recording already finalized")
        if offset_us < self._last_offset:
            raise OffsetRegression(f"offset {offset_us} after {self._last_offset}")
        record = _REC_HEAD.pack(rtype, offset_us) + body
        try:
            self._fh.write(record)
        except OSError as exc:
            raise _translate_oserror(exc) from None
        self._crc = _kernels.crc64_update(self._crc, record)
        self._last_offset = offset_us
        self._count += 1
        self._counts[rtype] += 1

    def append_frame(self, frame: MediaFrame, offset_us: int):
        self._append(RT_FRAME, offset_us, encode_frame_body(frame))

    def append_event(self, e: AnnotationEvent, offset_us: int):
        if not isinstance(e, ANNOTATION_TYPES):
            raise RecordingError(f"not an annotation event: {e!r}")
        body = encode_event(e)
        self._append(RT_EVENT, offset_us, struct.pack("<I", len(body)) + body)

    def append_signal(self, msg, offset_us: int):
        if not isinstance(msg, SIGNAL_TYPES):
            raise RecordingError(f"not a signal message: {msg!r}")
        body = encode_event(msg)
        self._append(RT_SIGNAL, offset_us, struct.pack("<I", len(body)) + body)

    def flush(self):
        if self._finalized is None:
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def finalize(self) -> RecordingInfo:
        """Write the trailer and close; calling again returns the same info."""
        if self._finalized is not None:
            return self._finalized
        digest = self._crc ^ _kernels.CRC64_XOROUT
        try:
            self._fh.write(bytes([RT_TRAILER]) + _TRAILER_TAIL.pack(self._count, digest))
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
        except OSError as exc:
            raise _translate_oserror(exc) from None
        self._finalized = RecordingInfo(
            path=self.path,
            session_id=self.session_id,
            wallclock_start_us=self.wallclock_start_us,
            records=self._count,
            counts={
                "frames": self._counts[RT_FRAME],
                "annotations": self._counts[RT_EVENT],
                "signals": self._counts[RT_SIGNAL],
            },
            crc64=digest,
        )
        return self._finalized

    def abort(self):
        if self._finalized is None:
            self._fh.close()


# ---------------------------------------------------------------------------
# Reading


def _read_header(buf: bytes) -> tuple[str, int, int]:
    """Returns (session_id, wallclock_start_us, body start offset)."""
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise MalformedRecording("bad magic")
    if len(buf) < 17:
        raise MalformedRecording("truncated header")
    version, ext_len, wallclock, sid_len = struct.unpack_from("<HHQB", buf, 4)
    if version != VERSION:
        raise UnsupportedVersion(f"version {version}")
    pos = 17 + ext_len
    if len(buf) < pos + sid_len:
        raise MalformedRecording("truncated header")
    sid = buf[pos : pos + sid_len].decode("utf-8")
    return sid, wallclock, pos + sid_len


def _parse_record(buf: bytes, pos: int) -> tuple[RecordItem, int]:
    rtype, offset_us = _REC_HEAD.unpack_from(buf, pos)
    pos += _REC_HEAD.size
    if rtype == RT_FRAME:
        frame, pos = decode_frame_body(buf, pos)
        return RecordItem(rtype=RT_FRAME, offset_us=offset_us, frame=frame), pos
    if rtype in (RT_EVENT, RT_SIGNAL):
        (n,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        if pos + n > len(buf):
            raise MalformedRecording("truncated event record")
        event = decode_event(bytes(buf[pos : pos + n]))
        if rtype == RT_EVENT and not isinstance(event, ANNOTATION_TYPES):
            raise MalformedRecording(f"record type 0x02 holds {type(event).__name__}")
        if rtype == RT_SIGNAL and not isinstance(event, SIGNAL_TYPES):
            raise MalformedRecording(f"record type 0x03 holds {type(event).__name__}")
        return RecordItem(rtype=rtype, offset_us=offset_us, event=event), pos + n
    raise MalformedRecording(f"unknown record type 0x{rtype:02x}")


@dataclass
class _Scan:
    session_id: str
    wallclock_start_us: int
    body_start: int
    records: list
    body_end: int
    trailer_ok: bool
    stored_count: Optional[int]
    stored_crc: Optional[int]
    error: Optional[Exception]


def _scan(buf: bytes) -> _Scan:
    sid, wallclock, pos = _read_header(buf)
    body_start = pos
    records: list[RecordItem] = []
    last_offset = -1
    error: Optional[Exception] = None
    stored_count = stored_crc = None
    trailer_ok = False
    body_end = pos
    while True:
        if pos >= len(buf):
            error = MalformedRecording("missing trailer")
            break
        if buf[pos] == RT_TRAILER:
            if pos + 1 + _TRAILER_TAIL.size > len(buf):
                error = MalformedRecording("truncated trailer")
                break
            stored_count, stored_crc = _TRAILER_TAIL.unpack_from(buf, pos + 1)
            trailer_ok = True
            break
        try:
            item, nxt = _parse_record(buf, pos)
        except Exception as exc:
            error = exc if isinstance(exc, RecordingError) else MalformedRecording(str(exc))
            break
        if item.offset_us < last_offset:
            error = MalformedRecording(f"offset regression at record {len(records)}")
            break
        last_offset = item.offset_us
        records.append(item)
        pos = nxt
        body_end = pos
    return _Scan(
        session_id=sid,
        wallclock_start_us=wallclock,
        body_start=body_start,
        records=records,
        body_end=body_end,
        trailer_ok=trailer_ok,
        stored_count=stored_count,
        stored_crc=stored_crc,
        error=error,
    )


def verify(path: Union[str, Path]) -> RecordingInfo:
    """Full structural and checksum audit of a finalized recording."""
    buf = Path(path).read_bytes()
    scan = _scan(buf)
    if scan.error is not None:
        raise scan.error
    if not scan.trailer_ok:
        raise MalformedRecording("missing trailer")
    if scan.stored_count != len(scan.records):
        raise MalformedRecording(
            f"trailer count {scan.stored_count} != {len(scan.records)} records"
        )
    digest = _kernels.crc64(buf[scan.body_start : scan.body_end])
    if digest != scan.stored_crc:
        raise ChecksumMismatch(f"stored {scan.stored_crc:#x}, computed {digest:#x}")
    counts = {"frames": 0, "annotations": 0, "signals": 0}
    for item in scan.records:
        if item.rtype == RT_FRAME:
            counts["frames"] += 1
        elif item.rtype == RT_EVENT:
            counts["annotations"] += 1
        else:
            counts["signals"] += 1
    return RecordingInfo(
        path=Path(path),
        session_id=scan.session_id,
        wallclock_start_us=scan.wallclock_start_us,
        records=len(scan.records),
        counts=counts,
        crc64=scan.stored_crc,
    )


def read_records(path: Union[str, Path]) -> list[RecordItem]:
    """All records of a recording, verified first."""
    verify(path)
    return _scan(Path(path).read_bytes()).records


def recover_truncated(src: Union[str, Path], dst: Union[str, Path]) -> RecordingInfo:
    """Salvage the longest valid record prefix of a damaged recording.

    Writes a fresh, verifiable file to ``dst`` with the original header
    and a recomputed trailer.
    """
    buf = Path(src).read_bytes()
    scan = _scan(buf)
    writer = RecordingWriter(
        dst, scan.session_id, wallclock_start_us=scan.wallclock_start_us
    )
    for item in scan.records:
        if item.rtype == RT_FRAME:
            writer.append_frame(item.frame, item.offset_us)
        elif item.rtype == RT_EVENT:
            writer.append_event(item.event, item.offset_us)
        else:
            writer.append_signal(item.event, item.offset_us)
    return writer.finalize()


# ---------------------------------------------------------------------------
# Replay


@dataclass(frozen=True, slots=True)
class ReplayReport:
    records: int
    counts: dict
    duration_us: int


def replay(
    path: Union[str, Path],
    speed: float,
    sink: Callable[[RecordItem], None],
    *,
    sleep: Callable[[float], None] = time.sleep,
    should_stop: Optional[Callable[[], bool]] = None,
) -> ReplayReport:
    """Emit a recording's records to ``sink`` in file order.

    Inter-record delays are offset deltas divided by ``speed``;
    ``math.inf`` replays as fast as possible.  The file is verified before
    anything is emitted.
    """
    if not speed > 0:
        raise ValueError("speed must be positive")
    verify(path)
    records = _scan(Path(path).read_bytes()).records
    start_offset = records[0].offset_us if records else 0
    emitted = 0
    counts = {"frames": 0, "annotations": 0, "signals": 0}
    prev_offset = start_offset
    for item in records:
        if should_stop is not None and should_stop():
            break
        if speed != math.inf and item.offset_us > prev_offset:
            sleep((item.offset_us - prev_offset) / 1_000_000.0 / speed)
        prev_offset = item.offset_us
        sink(item)
        emitted += 1
        if item.rtype == RT_FRAME:
            counts["frames"] += 1
        elif item.rtype == RT_EVENT:
            counts["annotations"] += 1
        else:
            counts["signals"] += 1
    duration = records[-1].offset_us - start_offset if records else 0
    return ReplayReport(records=emitted, counts=counts, duration_us=duration)


class ReplaySession:
    """A recording being reviewed, plus the sidecar for new annotations.

    The sidecar recording is created lazily next to the source on the
    first annotation and inherits the source's session id.  The source is
    read-only throughout; ``source_hash`` lets callers assert it.
    """

    def __init__(self, source: Union[str, Path], speed: float = 1.0):
        self.source = Path(source)
        self.info = verify(self.source)
        if not speed > 0:
            raise ValueError("speed must be positive")
        self.speed = speed
        self.position_us = 0
        self._sidecar: Optional[RecordingWriter] = None
        self.sidecar_path = self.source.with_suffix(".overlay.svrs")

    def source_hash(self) -> int:
        return _kernels.crc64(self.source.read_bytes())

    def annotate(self, e: AnnotationEvent):
        """Append a review annotation to the sidecar at the current position."""
        if self._sidecar is None:
            self._sidecar = RecordingWriter(self.sidecar_path, self.info.session_id)
        self._sidecar.append_event(e, self.position_us)

    def finalize_sidecar(self) -> Optional[RecordingInfo]:
        if self._sidecar is None:
            return None
        return self._sidecar.finalize()


def merge_overlay(
    original: list[tuple[AnnotationEvent, int]],
    overlay: list[tuple[AnnotationEvent, int]],
) -> list[AnnotationEvent]:
    """Merge review annotations into the original event list for rebuild.

    Inputs are (event, offset_us) pairs.  Events are ordered by recording
    offset (ties go to the original) and re-stamped with fresh contiguous
    seqs, since the two logs have independent seq spaces.
    """
    tagged = [(off, 0, i, e) for i, (e, off) in enumerate(original)]
    tagged += [(off, 1, i, e) for i, (e, off) in enumerate(overlay)]
    tagged.sort(key=lambda t: (t[0], t[1], t[2]))
    return [replace(e, seq=i) for i, (_, _, _, e) in enumerate(tagged)]
