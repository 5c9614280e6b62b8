"""Authoritative annotation log semantics: a deterministic state fold.

A single per-session authority stamps every accepted drawing event with a
gap-free ``seq`` and applies it; every client rebuilds the same state by
folding the same events.  The rules, beyond what the event types already
say:

* Drawing happens on the zoomed stream only: BeginShape and Erase require
  their stream to be the zoomed one.  At most one stream is zoomed.
* Zoom may not change while a shape is open; ZoomIn switches the zoomed
  stream, ZoomIn on the already-zoomed stream and ZoomOut on a non-zoomed
  stream are errors.
* Beginning a shape on a playing stream pauses it first (implicit pause),
  freezing the view on the latest delivered frame.  Play/pause may not be
  toggled while a shape is open, so an open shape implies a paused stream.
* The play/pause button also captures a screenshot of the frozen frame,
  both on pause and on resume (on resume it captures the frame that was
  showing while paused).
* Ending a one-point shape duplicates the anchor: a click without a drag
  leaves a dot, and the pencil's two-point minimum holds.
* The eraser removes every visible shape whose outline comes within
  ``radius`` of the erase path, as one undoable action; an erase that hits
  nothing is a no-op and does not disturb the redo stack.

Invalid-in-context events raise :class:`InvalidInContext` and leave state
untouched; they signal client bugs, are reported to the submitter, and are
never committed to the log.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Union

from . import _kernels
from .events import (
    AnnotationEvent,
    BeginShape,
    EndShape,
    Erase,
    ExtendShape,
    PlayPauseScreenshot,
    Redo,
    Tool,
    Undo,
    ZoomIn,
    ZoomOut,
)
from .model import StreamKind

OVAL_SEGMENTS = 128  # fixed outline tessellation; part of the hit-test contract


class AnnotError(Exception):
    pass


class OutOfOrderEvent(AnnotError):
    def __init__(self, expected: int, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected seq {expected}, got {got}")


class InvalidInContext(AnnotError):
    """Event is well-formed but not applicable; state is unchanged."""


@dataclass(frozen=True, slots=True)
class Shape:
    id: int
    tool: Tool
    points: tuple[tuple[float, float], ...]
    color: tuple[int, int, int, int]
    width: float

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))
        n = len(self.points)
        if self.tool is Tool.Pencil:
            if n < 2:
                raise AnnotError("pencil shapes need at least two points")
        elif n != 2:
            raise AnnotError(f"{self.tool.value} shapes have exactly two points")


@dataclass(frozen=True, slots=True)
class AddShape:
    shape: Shape


@dataclass(frozen=True, slots=True)
class EraseShapes:
    # (original index in visible order, shape) pairs, ascending index
    entries: tuple[tuple[int, Shape], ...]


ReversibleAction = Union[AddShape, EraseShapes]


@dataclass(frozen=True, slots=True)
class Playing:
    pass


@dataclass(frozen=True, slots=True)
class Paused:
    at_seq: Optional[int]  # latest delivered frame when frozen; None if none yet


PLAYING = Playing()


@dataclass(frozen=True, slots=True)
class Screenshot:
    id: int
    stream: StreamKind
    frame_seq: Optional[int]
    shapes: tuple[Shape, ...]
    ts_us: int


@dataclass(frozen=True, slots=True)
class Pause:
    stream: StreamKind
    at_seq: Optional[int]


@dataclass(frozen=True, slots=True)
class Resume:
    stream: StreamKind


@dataclass(frozen=True, slots=True)
class CaptureScreenshot:
    shot: Screenshot


DerivedEffect = Union[Pause, Resume, CaptureScreenshot]


@dataclass(frozen=True, slots=True)
class StreamAnnotations:
    visible: tuple[Shape, ...] = ()
    undo_stack: tuple[ReversibleAction, ...] = ()
    redo_stack: tuple[ReversibleAction, ...] = ()
    open_shape: Optional[Shape] = None
    playback: Union[Playing, Paused] = PLAYING


@dataclass(frozen=True, slots=True)
class AnnotationState:
    site: StreamAnnotations = StreamAnnotations()
    vitals: StreamAnnotations = StreamAnnotations()
    zoomed: Optional[StreamKind] = None
    last_seq: Optional[int] = None
    next_shape_id: int = 0
    next_screenshot_id: int = 0

    def stream(self, kind: StreamKind) -> StreamAnnotations:
        if kind is StreamKind.Site:
            return self.site
        if kind is StreamKind.Vitals:
            return self.vitals
        raise AnnotError(f"not an annotatable stream: {kind!r}")

    def _put(self, kind: StreamKind, ss: StreamAnnotations) -> "AnnotationState":
        if kind is StreamKind.Site:
            return replace(self, site=ss)
        return replace(self, vitals=ss)

    def open_anywhere(self) -> bool:
        return self.site.open_shape is not None or self.vitals.open_shape is not None


def empty_state() -> AnnotationState:
    return AnnotationState()


def apply(
    state: AnnotationState, e: AnnotationEvent
) -> tuple[AnnotationState, list[DerivedEffect]]:
    """Pure transition: returns the next state and any derived effects.

    Requires an authority-stamped event whose seq extends the log by
    exactly one.
    """
    expected = 0 if state.last_seq is None else state.last_seq + 1
    if e.seq != expected:
        raise OutOfOrderEvent(expected, e.seq)

    nxt, effects = _apply_inner(state, e)
    return replace(nxt, last_seq=expected), effects


def _apply_inner(state, e):
    ss = state.stream(e.stream)

    if isinstance(e, ZoomIn):
        if state.zoomed == e.stream:
            raise InvalidInContext("stream already zoomed")
        if state.open_anywhere():
            raise InvalidInContext("cannot change zoom while a shape is open")
        return replace(state, zoomed=e.stream), []

    if isinstance(e, ZoomOut):
        if state.zoomed != e.stream:
            raise InvalidInContext("stream is not zoomed")
        if state.open_anywhere():
            raise InvalidInContext("cannot change zoom while a shape is open")
        return replace(state, zoomed=None), []

    if isinstance(e, BeginShape):
        if state.zoomed != e.stream:
            raise InvalidInContext("drawing requires the stream to be zoomed")
        if ss.open_shape is not None:
            raise InvalidInContext("a shape is already open")
        effects: list[DerivedEffect] = []
        playback = ss.playback
        if isinstance(playback, Playing):
            playback = Paused(at_seq=e.frame_seq)
            effects.append(Pause(stream=e.stream, at_seq=e.frame_seq))
        shape = _new_open_shape(state.next_shape_id, e)
        ss = replace(ss, open_shape=shape, playback=playback)
        return replace(state._put(e.stream, ss), next_shape_id=state.next_shape_id + 1), effects

    if isinstance(e, ExtendShape):
        if ss.open_shape is None:
            raise InvalidInContext("no open shape to extend")
        sh = ss.open_shape
        if sh.tool is Tool.Pencil:
            points = sh.points + (e.point,)
        else:
            points = (sh.points[0], e.point)
        sh = _rawshape(sh, points)
        return state._put(e.stream, replace(ss, open_shape=sh)), []

    if isinstance(e, EndShape):
        if ss.open_shape is None:
            raise InvalidInContext("no open shape to end")
        sh = ss.open_shape
        if len(sh.points) == 1:
            sh = _rawshape(sh, sh.points + (sh.points[0],))
        sh = Shape(id=sh.id, tool=sh.tool, points=sh.points, color=sh.color, width=sh.width)
        ss = replace(
            ss,
            visible=ss.visible + (sh,),
            undo_stack=ss.undo_stack + (AddShape(sh),),
            redo_stack=(),
            open_shape=None,
        )
        return state._put(e.stream, ss), []

    if isinstance(e, Erase):
        if state.zoomed != e.stream:
            raise InvalidInContext("erasing requires the stream to be zoomed")
        if ss.open_shape is not None:
            raise InvalidInContext("cannot erase while a shape is open")
        hit_ids = set(hit_test_erase(ss.visible, e.path, e.radius))
        if not hit_ids:
            return state, []
        entries = tuple(
            (i, sh) for i, sh in enumerate(ss.visible) if sh.id in hit_ids
        )
        ss = replace(
            ss,
            visible=tuple(sh for sh in ss.visible if sh.id not in hit_ids),
            undo_stack=ss.undo_stack + (EraseShapes(entries),),
            redo_stack=(),
        )
        return state._put(e.stream, ss), []

    if isinstance(e, Undo):
        if not ss.undo_stack:
            raise InvalidInContext("nothing to undo")
        action = ss.undo_stack[-1]
        visible = _revert(ss.visible, action)
        ss = replace(
            ss,
            visible=visible,
            undo_stack=ss.undo_stack[:-1],
            redo_stack=ss.redo_stack + (action,),
        )
        return state._put(e.stream, ss), []

    if isinstance(e, Redo):
        if not ss.redo_stack:
            raise InvalidInContext("nothing to redo")
        action = ss.redo_stack[-1]
        visible = _reapply(ss.visible, action)
        ss = replace(
            ss,
            visible=visible,
            undo_stack=ss.undo_stack + (action,),
            redo_stack=ss.redo_stack[:-1],
        )
        return state._put(e.stream, ss), []

    if isinstance(e, PlayPauseScreenshot):
        if ss.open_shape is not None:
            raise InvalidInContext("cannot toggle playback while a shape is open")
        effects = []
        if isinstance(ss.playback, Playing):
            frozen = e.frame_seq
            playback = Paused(at_seq=frozen)
            effects.append(Pause(stream=e.stream, at_seq=frozen))
        else:
            frozen = ss.playback.at_seq
            playback = PLAYING
            effects.append(Resume(stream=e.stream))
        shot = Screenshot(
            id=state.next_screenshot_id,
            stream=e.stream,
            frame_seq=frozen,
            shapes=ss.visible,
            ts_us=e.ts_us if e.ts_us is not None else 0,
        )
        effects.append(CaptureScreenshot(shot))
        nxt = state._put(e.stream, replace(ss, playback=playback))
        return replace(nxt, next_screenshot_id=state.next_screenshot_id + 1), effects

    raise AnnotError(f"unhandled event: {e!r}")


def _new_open_shape(shape_id: int, e: BeginShape) -> Shape:
    raw = object.__new__(Shape)
    object.__setattr__(raw, "id", shape_id)
    object.__setattr__(raw, "tool", e.tool)
    object.__setattr__(raw, "points", (e.point,))
    object.__setattr__(raw, "color", e.color)
    object.__setattr__(raw, "width", e.width)
    return raw


def _rawshape(sh: Shape, points) -> Shape:
    # Bypass point-count validation while a shape is under construction.
    raw = object.__new__(Shape)
    object.__setattr__(raw, "id", sh.id)
    object.__setattr__(raw, "tool", sh.tool)
    object.__setattr__(raw, "points", tuple(points))
    object.__setattr__(raw, "color", sh.color)
    object.__setattr__(raw, "width", sh.width)
    return raw


def _revert(visible: tuple[Shape, ...], action: ReversibleAction) -> tuple[Shape, ...]:
    if isinstance(action, AddShape):
        assert visible and visible[-1].id == action.shape.id, "undo stack out of sync"
        return visible[:-1]
    out = list(visible)
    for idx, sh in action.entries:
        out.insert(idx, sh)
    return tuple(out)


def _reapply(visible: tuple[Shape, ...], action: ReversibleAction) -> tuple[Shape, ...]:
    if isinstance(action, AddShape):
        return visible + (action.shape,)
    gone = {sh.id for _, sh in action.entries}
    return tuple(sh for sh in visible if sh.id not in gone)


def rebuild(events: Iterable[AnnotationEvent]) -> AnnotationState:
    """Fold :func:`apply` over a gap-free event list from the empty state."""
    state = empty_state()
    for e in events:
        try:
            state, _ = apply(state, e)
        except InvalidInContext as exc:
            raise InvalidInContext(f"at seq {e.seq}: {exc}") from None
    return state


def outline_points(shape: Shape) -> tuple[tuple[float, float], ...]:
    """The polyline a shape presents to hit testing.

    Pencil: its stroke points.  Arrow: the anchor-to-tip segment.
    Rectangle: the four corners of the drag box, closed.  Oval: the
    ellipse inscribed in the drag box, as a fixed 128-segment polygon.
    """
    if shape.tool is Tool.Pencil:
        return shape.points
    (x0, y0), (x1, y1) = shape.points[0], shape.points[-1]
    if shape.tool is Tool.Arrow:
        return ((x0, y0), (x1, y1))
    if shape.tool is Tool.Rectangle:
        return ((x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0))
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    rx, ry = abs(x1 - x0) / 2.0, abs(y1 - y0) / 2.0
    pts = []
    for k in range(OVAL_SEGMENTS + 1):
        a = math.tau * k / OVAL_SEGMENTS
        pts.append((cx + rx * math.cos(a), cy + ry * math.sin(a)))
    return tuple(pts)


def state_digest(state: AnnotationState) -> str:
    """Stable 16-hex-digit hash of the observable annotation state.

    Clients compare this against the authority's debug endpoint to check
    convergence; it covers everything a console renders.
    """
    from . import events as _ev

    def shape_obj(sh: Shape):
        return {
            "id": sh.id,
            "tool": sh.tool.value,
            "points": [list(p) for p in sh.points],
            "color": list(sh.color),
            "width": sh.width,
        }

    def stream_obj(ss: StreamAnnotations):
        return {
            "visible": [shape_obj(s) for s in ss.visible],
            "open": shape_obj(ss.open_shape) if ss.open_shape else "none",
            "undo_depth": len(ss.undo_stack),
            "redo_depth": len(ss.redo_stack),
            "playback": "playing"
            if isinstance(ss.playback, Playing)
            else {"paused_at": -1 if ss.playback.at_seq is None else ss.playback.at_seq},
        }

    obj = {
        "site": stream_obj(state.site),
        "vitals": stream_obj(state.vitals),
        "zoomed": state.zoomed.value if state.zoomed else "none",
        "last_seq": -1 if state.last_seq is None else state.last_seq,
    }
    return f"{_kernels.crc64(_ev._emit(obj).encode()):016x}"


def _flat(points) -> array:
    out = array("d")
    for p in points:
        out.append(p[0])
        out.append(p[1])
    return out


def hit_test_erase(
    shapes: Iterable[Shape], path: Iterable[tuple[float, float]], radius: float
) -> list[int]:
    """Ids of shapes whose outline comes within ``radius`` of the path.

    Distance is the minimum between the two polylines (crossings count as
    zero); results keep visible order.
    """
    if not 0.0 < radius <= 0.1:
        raise AnnotError(f"radius out of range: {radius}")
    path_flat = _flat(path)
    hits = []
    for sh in shapes:
        d = _kernels.polyline_min_distance(_flat(outline_points(sh)), path_flat)
        if d <= radius:
            hits.append(sh.id)
    return hits
