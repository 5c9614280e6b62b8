"""Session event vocabulary and its canonical byte encoding.

Every control and drawing message crosses the wire, and lands in
recordings, as canonical JSON text:

* keys sorted ascending by code point, no insignificant whitespace, UTF-8;
* normalized coordinates (points, stroke width, erase radius) printed with
  exactly six decimal places; integers printed bare;
* optional authority stamps (``seq``, ``ts_us``, ``frame_seq``) omitted
  while unassigned, never encoded as null.

Encoding is a pure function: the same event value always produces the same
bytes, on every platform.  ``decode_event`` accepts any JSON spelling of a
well-formed event (whitespace and key order do not matter) but enforces the
schema strictly, so ``encode(decode(b)) == b`` holds for every canonical
``b`` and ``decode(encode(e)) == e`` for every valid event ``e``.

Normalized coordinates are kept on a 1e-6 grid: constructors reject values
that are not exactly representable with six decimal places.  Use
:func:`quantize` when building events from raw pointer input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Union

from .model import (
    ANNOTATABLE,
    PROTO_VERSION,
    U64_MAX,
    ModelError,
    PeerRole,
    StreamKind,
    validate_session_id,
)


class MalformedEvent(ValueError):
    """Byte sequence is not a well-formed event: corrupt peer or file."""


def quantize(x: float) -> float:
    """Snap a normalized coordinate onto the canonical 1e-6 grid."""
    return round(x, 6) + 0.0  # +0.0 folds -0.0 into 0.0


def _check_norm(name: str, x: float, lo: float = 0.0, hi: float = 1.0, open_lo: bool = False):
    if not isinstance(x, float):
        raise ModelError(f"{name} must be a float, got {type(x).__name__}")
    if x != quantize(x):
        raise ModelError(f"{name}={x!r} is not on the 1e-6 grid")
    if (open_lo and not lo < x <= hi) or (not open_lo and not lo <= x <= hi):
        raise ModelError(f"{name}={x!r} out of range")


def _check_point(p):
    if not (isinstance(p, tuple) and len(p) == 2):
        raise ModelError(f"point must be a (u, v) tuple, got {p!r}")
    _check_norm("u", p[0])
    _check_norm("v", p[1])


def _check_u64(name: str, n, optional: bool = False):
    if n is None and optional:
        return
    if not isinstance(n, int) or isinstance(n, bool) or not 0 <= n <= U64_MAX:
        raise ModelError(f"{name}={n!r} is not an unsigned 64-bit integer")


def _check_annot_stream(stream):
    if stream not in ANNOTATABLE:
        raise ModelError(f"annotation stream must be Site or Vitals, got {stream!r}")


class Tool(Enum):
    Pencil = "Pencil"
    Oval = "Oval"
    Rectangle = "Rectangle"
    Arrow = "Arrow"


# --------------------------------------------------------------------------
# Signaling messages (session establishment and teardown)


@dataclass(frozen=True, slots=True)
class Hello:
    session: str
    role: PeerRole
    proto_version: int = PROTO_VERSION

    def __post_init__(self):
        validate_session_id(self.session)
        if not isinstance(self.role, PeerRole):
            raise ModelError(f"bad role: {self.role!r}")
        _check_u64("proto_version", self.proto_version)


@dataclass(frozen=True, slots=True)
class StreamAdvertise:
    """Streams the sender can publish, with their content types."""

    streams: frozenset[tuple[StreamKind, str]]

    def __post_init__(self):
        object.__setattr__(self, "streams", frozenset(self.streams))
        for entry in self.streams:
            if not (isinstance(entry, tuple) and len(entry) == 2):
                raise ModelError(f"bad advertise entry: {entry!r}")
            kind, ct = entry
            if not isinstance(kind, StreamKind) or not isinstance(ct, str) or not ct:
                raise ModelError(f"bad advertise entry: {entry!r}")


@dataclass(frozen=True, slots=True)
class StreamRequest:
    streams: frozenset[StreamKind]

    def __post_init__(self):
        object.__setattr__(self, "streams", frozenset(self.streams))
        for kind in self.streams:
            if not isinstance(kind, StreamKind):
                raise ModelError(f"bad stream: {kind!r}")


@dataclass(frozen=True, slots=True)
class StreamAck:
    streams: frozenset[StreamKind]

    def __post_init__(self):
        object.__setattr__(self, "streams", frozenset(self.streams))
        for kind in self.streams:
            if not isinstance(kind, StreamKind):
                raise ModelError(f"bad stream: {kind!r}")


@dataclass(frozen=True, slots=True)
class Bye:
    reason: str = ""

    def __post_init__(self):
        if not isinstance(self.reason, str):
            raise ModelError("reason must be a string")


SignalMessage = Union[Hello, StreamAdvertise, StreamRequest, StreamAck, Bye]


# --------------------------------------------------------------------------
# Annotation events (the drawing protocol)
#
# seq/ts_us are stamped by the per-session authority; clients submit events
# with both unset.  BeginShape and PlayPauseScreenshot additionally carry
# frame_seq, the latest delivered frame on the target stream at commit time,
# so that pause points and screenshots rebuild deterministically from the
# event log alone.


@dataclass(frozen=True, slots=True)
class ZoomIn:
    stream: StreamKind
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class ZoomOut:
    stream: StreamKind
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class BeginShape:
    stream: StreamKind
    tool: Tool
    point: tuple[float, float]
    color: tuple[int, int, int, int] = (255, 32, 32, 255)
    width: float = 0.004
    frame_seq: int | None = None
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        if not isinstance(self.tool, Tool):
            raise ModelError(f"bad tool: {self.tool!r}")
        object.__setattr__(self, "point", tuple(self.point))
        _check_point(self.point)
        object.__setattr__(self, "color", tuple(self.color))
        if len(self.color) != 4 or not all(
            isinstance(c, int) and 0 <= c <= 255 for c in self.color
        ):
            raise ModelError(f"bad color: {self.color!r}")
        _check_norm("width", self.width, lo=0.0, hi=0.1, open_lo=True)
        _check_u64("frame_seq", self.frame_seq, optional=True)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class ExtendShape:
    stream: StreamKind
    point: tuple[float, float]
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        object.__setattr__(self, "point", tuple(self.point))
        _check_point(self.point)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class EndShape:
    stream: StreamKind
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class Erase:
    stream: StreamKind
    path: tuple[tuple[float, float], ...]
    radius: float = 0.02
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        object.__setattr__(self, "path", tuple(tuple(p) for p in self.path))
        if not self.path:
            raise ModelError("erase path must have at least one point")
        for p in self.path:
            _check_point(p)
        _check_norm("radius", self.radius, lo=0.0, hi=0.1, open_lo=True)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class Undo:
    stream: StreamKind
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class Redo:
    stream: StreamKind
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


@dataclass(frozen=True, slots=True)
class PlayPauseScreenshot:
    """One button, two behaviors: toggles playback and captures a screenshot."""

    stream: StreamKind
    frame_seq: int | None = None
    seq: int | None = None
    ts_us: int | None = None

    def __post_init__(self):
        _check_annot_stream(self.stream)
        _check_u64("frame_seq", self.frame_seq, optional=True)
        _check_u64("seq", self.seq, optional=True)
        _check_u64("ts_us", self.ts_us, optional=True)


AnnotationEvent = Union[
    ZoomIn, ZoomOut, BeginShape, ExtendShape, EndShape, Erase, Undo, Redo, PlayPauseScreenshot
]


# --------------------------------------------------------------------------
# Server notices (wire-only; never recorded, never forwarded)


@dataclass(frozen=True, slots=True)
class Rejected:
    """Authority refused a submitted event; session state is unchanged."""

    code: str
    detail: str = ""


@dataclass(frozen=True, slots=True)
class ErrorNotice:
    """Protocol violation report sent before the connection is dropped."""

    code: str
    detail: str = ""


Notice = Union[Rejected, ErrorNotice]

SessionEvent = Union[SignalMessage, AnnotationEvent]
WireMessage = Union[SessionEvent, Notice]


def stamp(e: AnnotationEvent, seq: int, ts_us: int, frame_seq: int | None = None):
    """Authority stamp: assign seq/ts_us (and frame_seq where carried)."""
    if hasattr(e, "frame_seq") and frame_seq is not None:
        return replace(e, seq=seq, ts_us=ts_us, frame_seq=frame_seq)
    return replace(e, seq=seq, ts_us=ts_us)


# --------------------------------------------------------------------------
# Canonical encoding

_TYPE_NAMES = {
    Hello: "Hello",
    StreamAdvertise: "StreamAdvertise",
    StreamRequest: "StreamRequest",
    StreamAck: "StreamAck",
    Bye: "Bye",
    ZoomIn: "ZoomIn",
    ZoomOut: "ZoomOut",
    BeginShape: "BeginShape",
    ExtendShape: "ExtendShape",
    EndShape: "EndShape",
    Erase: "Erase",
    Undo: "Undo",
    Redo: "Redo",
    PlayPauseScreenshot: "PlayPauseScreenshot",
    Rejected: "Rejected",
    ErrorNotice: "Error",
}
_NAME_TYPES = {name: cls for cls, name in _TYPE_NAMES.items()}

SIGNAL_TYPES = (Hello, StreamAdvertise, StreamRequest, StreamAck, Bye)
ANNOTATION_TYPES = (
    ZoomIn, ZoomOut, BeginShape, ExtendShape, EndShape, Erase, Undo, Redo, PlayPauseScreenshot,
)
NOTICE_TYPES = (Rejected, ErrorNotice)


def _wire_value(v):
    if isinstance(v, (StreamKind, PeerRole, Tool)):
        return v.value
    if isinstance(v, frozenset):
        return sorted(_wire_value(x) for x in v)
    if isinstance(v, tuple):
        return [_wire_value(x) for x in v]
    return v


def _emit(v) -> str:
    if isinstance(v, bool):
        raise MalformedEvent("booleans have no canonical form")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, list):
        return "[" + ",".join(_emit(x) for x in v) + "]"
    if isinstance(v, dict):
        items = sorted(v.items())
        return "{" + ",".join(f"{json.dumps(k)}:{_emit(x)}" for k, x in items) + "}"
    raise MalformedEvent(f"unencodable value: {v!r}")


def encode_event(e: WireMessage) -> bytes:
    """Canonical bytes of an event; deterministic across runs and platforms."""
    cls = type(e)
    if cls not in _TYPE_NAMES:
        raise MalformedEvent(f"not an event: {e!r}")
    d = {"type": _TYPE_NAMES[cls]}
    for f in fields(e):
        v = getattr(e, f.name)
        if v is None:
            continue
        d[f.name] = _wire_value(v)
    return _emit(d).encode("utf-8")


_MISSING = object()


class _Reader:
    """Field-by-field consumer over a decoded JSON object; leftovers are errors."""

    def __init__(self, obj: dict):
        self.obj = dict(obj)

    def take(self, key, default=_MISSING):
        if key in self.obj:
            return self.obj.pop(key)
        if default is _MISSING:
            raise MalformedEvent(f"missing field {key!r}")
        return default

    def done(self):
        if self.obj:
            raise MalformedEvent(f"unknown fields: {sorted(self.obj)}")


def _as_stream(v) -> StreamKind:
    try:
        return StreamKind(v)
    except (ValueError, TypeError):
        raise MalformedEvent(f"unknown stream: {v!r}") from None


def _as_role(v) -> PeerRole:
    try:
        return PeerRole(v)
    except (ValueError, TypeError):
        raise MalformedEvent(f"unknown role: {v!r}") from None


def _as_tool(v) -> Tool:
    try:
        return Tool(v)
    except (ValueError, TypeError):
        raise MalformedEvent(f"unknown tool: {v!r}") from None


def _as_point(v) -> tuple[float, float]:
    if not (isinstance(v, list) and len(v) == 2):
        raise MalformedEvent(f"bad point: {v!r}")
    return (_as_norm(v[0]), _as_norm(v[1]))


def _as_norm(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedEvent(f"bad coordinate: {v!r}")
    return float(v)


def _as_int(v, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise MalformedEvent(f"field {key!r} must be an integer, got {v!r}")
    return v


def _as_str(v, key: str) -> str:
    if not isinstance(v, str):
        raise MalformedEvent(f"field {key!r} must be a string, got {v!r}")
    return v


def _as_color(v) -> tuple[int, int, int, int]:
    if not (isinstance(v, list) and len(v) == 4):
        raise MalformedEvent(f"bad color: {v!r}")
    return tuple(_as_int(c, "color") for c in v)


def _opt_stamps(r: _Reader) -> dict:
    out = {}
    if "seq" in r.obj:
        out["seq"] = _as_int(r.take("seq"), "seq")
    if "ts_us" in r.obj:
        out["ts_us"] = _as_int(r.take("ts_us"), "ts_us")
    return out


def decode_event(b: bytes | str) -> WireMessage:
    """Inverse of :func:`encode_event` on its image.

    Raises :class:`MalformedEvent` on bad syntax, unknown type, missing or
    unknown fields, wrong field types, or out-of-range values.
    """
    if isinstance(b, bytes):
        try:
            b = b.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedEvent(f"not UTF-8: {exc}") from None
    try:
        obj = json.loads(b)
    except json.JSONDecodeError as exc:
        raise MalformedEvent(f"bad JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedEvent("event must be a JSON object")
    r = _Reader(obj)
    name = r.take("type")
    cls = _NAME_TYPES.get(name)
    if cls is None:
        raise MalformedEvent(f"unknown event type: {name!r}")
    try:
        e = _DECODERS[cls](r)
        r.done()
    except ModelError as exc:
        raise MalformedEvent(str(exc)) from None
    return e


def _dec_hello(r: _Reader) -> Hello:
    return Hello(
        session=_as_str(r.take("session"), "session"),
        role=_as_role(r.take("role")),
        proto_version=_as_int(r.take("proto_version"), "proto_version"),
    )


def _dec_advertise(r: _Reader) -> StreamAdvertise:
    v = r.take("streams")
    if not isinstance(v, list):
        raise MalformedEvent("streams must be a list")
    entries = []
    for item in v:
        if not (isinstance(item, list) and len(item) == 2):
            raise MalformedEvent(f"bad advertise entry: {item!r}")
        entries.append((_as_stream(item[0]), _as_str(item[1], "content_type")))
    return StreamAdvertise(streams=frozenset(entries))


def _dec_streamset(r: _Reader):
    v = r.take("streams")
    if not isinstance(v, list):
        raise MalformedEvent("streams must be a list")
    return frozenset(_as_stream(x) for x in v)


def _dec_begin(r: _Reader) -> BeginShape:
    kw = {}
    if "frame_seq" in r.obj:
        kw["frame_seq"] = _as_int(r.take("frame_seq"), "frame_seq")
    kw.update(_opt_stamps(r))
    return BeginShape(
        stream=_as_stream(r.take("stream")),
        tool=_as_tool(r.take("tool")),
        point=_as_point(r.take("point")),
        color=_as_color(r.take("color")),
        width=_as_norm(r.take("width")),
        **kw,
    )


def _dec_erase(r: _Reader) -> Erase:
    kw = _opt_stamps(r)
    path = r.take("path")
    if not isinstance(path, list):
        raise MalformedEvent("path must be a list")
    return Erase(
        stream=_as_stream(r.take("stream")),
        path=tuple(_as_point(p) for p in path),
        radius=_as_norm(r.take("radius")),
        **kw,
    )


def _dec_ppss(r: _Reader) -> PlayPauseScreenshot:
    kw = {}
    if "frame_seq" in r.obj:
        kw["frame_seq"] = _as_int(r.take("frame_seq"), "frame_seq")
    kw.update(_opt_stamps(r))
    return PlayPauseScreenshot(stream=_as_stream(r.take("stream")), **kw)


def _simple(cls):
    def dec(r: _Reader):
        kw = _opt_stamps(r)
        return cls(stream=_as_stream(r.take("stream")), **kw)

    return dec


_DECODERS = {
    Hello: _dec_hello,
    StreamAdvertise: _dec_advertise,
    StreamRequest: lambda r: StreamRequest(streams=_dec_streamset(r)),
    StreamAck: lambda r: StreamAck(streams=_dec_streamset(r)),
    Bye: lambda r: Bye(reason=_as_str(r.take("reason", ""), "reason")),
    ZoomIn: _simple(ZoomIn),
    ZoomOut: _simple(ZoomOut),
    BeginShape: _dec_begin,
    ExtendShape: lambda r: ExtendShape(
        **_opt_stamps(r), stream=_as_stream(r.take("stream")), point=_as_point(r.take("point"))
    ),
    EndShape: _simple(EndShape),
    Erase: _dec_erase,
    Undo: _simple(Undo),
    Redo: _simple(Redo),
    PlayPauseScreenshot: _dec_ppss,
    Rejected: lambda r: Rejected(
        code=_as_str(r.take("code"), "code"), detail=_as_str(r.take("detail", ""), "detail")
    ),
    ErrorNotice: lambda r: ErrorNotice(
        code=_as_str(r.take("code"), "code"), detail=_as_str(r.take("detail", ""), "detail")
    ),
}
