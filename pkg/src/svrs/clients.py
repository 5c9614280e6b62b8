"""Headless scripted clients: the room publisher and the remote guide.

These drive the server exactly like the browser pages do, over the same
WebSocket interface, which makes them the workhorses of the end-to-end
tests and the ``svrs room`` / ``svrs guide`` CLI verbs.  The room client
publishes test patterns (or an image directory) on the three room streams
and mirrors every committed annotation event into a transcript; the guide
client consumes the streams, submits a scripted event sequence, and
publishes a composited guide-view return stream.
"""

from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from websockets.asyncio.client import connect
from websockets.exceptions import ConnectionClosed

from . import viewmath as vm
from .compositor import GUIDE_VIEW_SIZE, compose_guide_view
from .events import (
    ANNOTATION_TYPES,
    AnnotationEvent,
    Bye,
    ErrorNotice,
    Hello,
    Rejected,
    SIGNAL_TYPES,
    StreamAck,
    StreamAdvertise,
    StreamRequest,
    decode_event,
    encode_event,
)
from .model import MediaFrame, PeerRole, StreamKind, ViewPose
from .testpattern import pattern_jpeg, read_pattern
from .wire import decode_frame, encode_frame

ROOM_STREAMS = (StreamKind.Surround360, StreamKind.Site, StreamKind.Vitals)

AUDIO_RATE = 16_000
AUDIO_CHUNK_MS = 20
AUDIO_CT = f"audio/pcm;rate={AUDIO_RATE}"


def _tone_chunk(chunk_index: int, hz: float) -> bytes:
    """One 20 ms chunk of a continuous 16-bit mono sine tone."""
    import math
    import struct as _struct

    samples = AUDIO_RATE * AUDIO_CHUNK_MS // 1000
    start = chunk_index * samples
    out = bytearray()
    for n in range(start, start + samples):
        out += _struct.pack("<h", int(12000 * math.sin(2 * math.pi * hz * n / AUDIO_RATE)))
    return bytes(out)


def _audio_publisher(report: "ClientReport", hz: float):
    async def publish(conn):
        i = 0
        period = AUDIO_CHUNK_MS / 1000.0
        next_at = time.monotonic()
        while True:
            frame = MediaFrame(
                stream=StreamKind.Audio,
                seq=i,
                ts_us=0,
                key=True,
                content_type=AUDIO_CT,
                payload=_tone_chunk(i, hz),
            )
            await conn.send(encode_frame(frame))
            report.frames_published["Audio"] = report.frames_published.get("Audio", 0) + 1
            i += 1
            next_at += period
            await asyncio.sleep(max(0.0, next_at - time.monotonic()))

    return publish


class HandshakeError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


@dataclass
class ClientReport:
    role: str
    frames_published: dict = field(default_factory=dict)
    frames_received: dict = field(default_factory=dict)
    committed: list = field(default_factory=list)  # canonical bytes, authority order
    rejections: list = field(default_factory=list)
    latencies_us: list = field(default_factory=list)
    transcript_path: Optional[Path] = None

    def committed_lines(self) -> list[bytes]:
        return list(self.committed)

    def write_transcript(self, path: Path):
        path.write_bytes(b"\n".join(self.committed) + (b"\n" if self.committed else b""))
        self.transcript_path = path


def _now_us() -> int:
    return time.monotonic_ns() // 1000


class _Negotiation:
    """Client half of the handshake, symmetric for either role."""

    def __init__(self, session: str, role: PeerRole, advertise, want):
        self.session = session
        self.role = role
        self.advertise = frozenset(advertise)
        self.want = frozenset(want)
        self.granted: Optional[frozenset] = None  # peer acked my request
        self.sent_ack = False
        self.peer_hello = False

    @property
    def complete(self) -> bool:
        return self.granted is not None and self.sent_ack

    async def start(self, conn):
        await conn.send(encode_event(Hello(session=self.session, role=self.role)).decode())

    async def handle(self, conn, msg) -> bool:
        """Feed one signal message; returns True when streaming can begin."""
        if isinstance(msg, Hello):
            self.peer_hello = True
            await conn.send(encode_event(StreamAdvertise(streams=self.advertise)).decode())
        elif isinstance(msg, StreamAdvertise):
            offered = {kind for kind, _ in msg.streams}
            await conn.send(
                encode_event(StreamRequest(streams=frozenset(self.want & offered))).decode()
            )
        elif isinstance(msg, StreamRequest):
            await conn.send(encode_event(StreamAck(streams=msg.streams)).decode())
            self.sent_ack = True
        elif isinstance(msg, StreamAck):
            self.granted = msg.streams
        return self.complete


async def _drive(
    conn,
    nego: _Negotiation,
    report: ClientReport,
    on_frame,
    publishers: Iterable,
    duration_s: float,
    on_event=None,
    handshake_timeout_s: Optional[float] = 10.0,
):
    """Shared client loop: negotiate, run publishers, dispatch messages."""
    await nego.start(conn)
    streaming = asyncio.Event()
    tasks: list[asyncio.Task] = []

    async def recv_loop():
        async for message in conn:
            if isinstance(message, bytes):
                frame = decode_frame(message)
                name = frame.stream.value
                report.frames_received[name] = report.frames_received.get(name, 0) + 1
                on_frame(frame, _now_us())
                continue
            msg = decode_event(message)
            if isinstance(msg, ErrorNotice):
                raise HandshakeError(msg.code, msg.detail)
            if isinstance(msg, Rejected):
                report.rejections.append(f"{msg.code}: {msg.detail}")
                continue
            if isinstance(msg, Bye):
                return
            if isinstance(msg, SIGNAL_TYPES):
                if await nego.handle(conn, msg):
                    streaming.set()
                continue
            if isinstance(msg, ANNOTATION_TYPES):
                report.committed.append(encode_event(msg))
                if on_event is not None:
                    on_event(msg)

    recv_task = asyncio.create_task(recv_loop())
    try:
        waiter = asyncio.create_task(streaming.wait())
        done, _ = await asyncio.wait(
            {recv_task, waiter},
            timeout=handshake_timeout_s,
            return_when=asyncio.FIRST_COMPLETED,
        )
        if recv_task in done:
            recv_task.result()  # surfaces handshake errors
            raise HandshakeError("PeerGone", "connection closed during handshake")
        if not streaming.is_set():
            raise HandshakeError("Timeout", "handshake did not complete")

        tasks = [asyncio.create_task(p(conn)) for p in publishers]
        done, _ = await asyncio.wait({recv_task}, timeout=duration_s)
        if recv_task in done:
            recv_task.result()
    finally:
        for t in tasks:
            t.cancel()
        if not recv_task.done():
            try:
                await conn.send(encode_event(Bye(reason="done")).decode())
            except ConnectionClosed:
                pass
            recv_task.cancel()
        await asyncio.gather(recv_task, *tasks, return_exceptions=True)


def _load_image_dir(path: Path) -> list[bytes]:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".jpg", ".jpeg"))
    if not files:
        raise FileNotFoundError(f"no .jpg images in {path}")
    return [p.read_bytes() for p in files]


async def headless_room(
    url: str,
    session: str,
    fps: float = 10.0,
    duration_s: float = 10.0,
    source: str = "test-pattern",
    pattern_size=(512, 256),
    streams: Iterable[StreamKind] = ROOM_STREAMS,
    audio: bool = False,
) -> ClientReport:
    """Publish the three room streams and mirror annotation events.

    With ``audio=True`` the room also speaks: it advertises the two-way
    audio channel, publishes a 20 ms-chunked PCM tone, and requests the
    guide's audio back.
    """
    report = ClientReport(role="room")
    advertise = set((kind, "image/jpeg") for kind in streams)
    want = {StreamKind.GuideView}
    if audio:
        advertise.add((StreamKind.Audio, AUDIO_CT))
        want.add(StreamKind.Audio)
    nego = _Negotiation(session, PeerRole.RoomPublisher, frozenset(advertise), want)
    images = _load_image_dir(Path(source)) if source != "test-pattern" else None

    def on_frame(frame: MediaFrame, _recv_us: int):
        pass  # the guide view is displayed, not measured, on the room side

    def make_publisher(kind: StreamKind):
        async def publish(conn):
            i = 0
            period = 1.0 / fps
            next_at = time.monotonic()
            while True:
                if images is not None:
                    payload = images[i % len(images)]
                else:
                    payload = pattern_jpeg(kind, i, _now_us(), size=pattern_size)
                frame = MediaFrame(
                    stream=kind,
                    seq=i,
                    ts_us=0,
                    key=True,
                    content_type="image/jpeg",
                    payload=payload,
                )
                await conn.send(encode_frame(frame))
                name = kind.value
                report.frames_published[name] = report.frames_published.get(name, 0) + 1
                i += 1
                next_at += period
                await asyncio.sleep(max(0.0, next_at - time.monotonic()))

        return publish

    publishers = [make_publisher(k) for k in streams]
    if audio:
        publishers.append(_audio_publisher(report, hz=220.0))
    async with connect(url, max_size=16 * 1024 * 1024, compression=None) as conn:
        await _drive(conn, nego, report, on_frame, publishers, duration_s)
    return report


@dataclass
class ScriptItem:
    at_ms: float
    event: Optional[AnnotationEvent] = None
    pose: Optional[ViewPose] = None


async def headless_guide(
    url: str,
    session: str,
    script: Iterable[ScriptItem] = (),
    duration_s: float = 10.0,
    gv_fps: float = 5.0,
    measure_stream: StreamKind = StreamKind.Site,
    role: PeerRole = PeerRole.RemoteGuide,
    audio: bool = False,
) -> ClientReport:
    """Consume the room streams, run a scripted gesture/pose sequence,
    publish the composited guide view, and transcript committed events.

    With ``role=ReplayViewer`` the client joins a replay session instead:
    it publishes nothing and its events land in the host's sidecar.
    """
    viewer = role is PeerRole.ReplayViewer
    report = ClientReport(role="viewer" if viewer else "guide")
    latest: dict[StreamKind, bytes] = {}
    advertise: set = set() if viewer else {(StreamKind.GuideView, "image/jpeg")}
    want = set(ROOM_STREAMS)
    if audio and not viewer:
        advertise.add((StreamKind.Audio, AUDIO_CT))
        want.add(StreamKind.Audio)
    nego = _Negotiation(session, role, frozenset(advertise), want)

    def on_frame(frame: MediaFrame, recv_us: int):
        latest[frame.stream] = frame.payload
        if frame.stream == measure_stream:
            info = read_pattern(frame.payload)
            if info is not None:
                report.latencies_us.append(recv_us - info.ts_us)

    follow = vm.FollowState()
    head = ViewPose()

    async def guide_view_publisher(conn):
        nonlocal follow
        i = 0
        period = 1.0 / gv_fps
        next_at = time.monotonic()
        while True:
            follow = vm.follow_step(follow, head, _now_us())
            payload = compose_guide_view(
                latest.get(StreamKind.Surround360),
                latest.get(StreamKind.Site),
                latest.get(StreamKind.Vitals),
                follow.ui_pose,
                size=GUIDE_VIEW_SIZE,
            )
            frame = MediaFrame(
                stream=StreamKind.GuideView,
                seq=i,
                ts_us=0,
                key=True,
                content_type="image/jpeg",
                payload=payload,
            )
            await conn.send(encode_frame(frame))
            report.frames_published["GuideView"] = report.frames_published.get("GuideView", 0) + 1
            i += 1
            next_at += period
            await asyncio.sleep(max(0.0, next_at - time.monotonic()))

    items = sorted(script, key=lambda it: it.at_ms)

    async def script_runner(conn):
        nonlocal head
        start = time.monotonic()
        for item in items:
            delay = item.at_ms / 1000.0 - (time.monotonic() - start)
            if delay > 0:
                await asyncio.sleep(delay)
            if item.pose is not None:
                head = item.pose
            if item.event is not None:
                await conn.send(encode_event(item.event).decode())

    publishers = [script_runner] if viewer else [guide_view_publisher, script_runner]
    if audio and not viewer:
        publishers.append(_audio_publisher(report, hz=330.0))
    async with connect(url, max_size=16 * 1024 * 1024, compression=None) as conn:
        await _drive(conn, nego, report, on_frame, publishers, duration_s)
    return report


async def replay_publisher(
    url: str,
    session: str,
    records,
    speed: float,
    position_cb=None,
) -> ClientReport:
    """Re-publish a recording's records into a replay session.

    ``records`` is the verified record list; frames and annotation events
    are sent at offset-paced times (``speed`` scales them, ``inf`` floods).
    """
    import math

    from . import recording as rec

    report = ClientReport(role="replayer")
    kinds = {item.frame.stream for item in records if item.rtype == rec.RT_FRAME}
    cts = {
        item.frame.stream: item.frame.content_type
        for item in records
        if item.rtype == rec.RT_FRAME
    }
    advertise = frozenset((k, cts[k]) for k in kinds)
    # the replayer requests nothing back; the empty direction still
    # completes the full advertise/request/ack handshake
    nego = _Negotiation(session, PeerRole.RoomPublisher, advertise, set())

    async def pump(conn):
        prev = records[0].offset_us if records else 0
        for item in records:
            if speed != math.inf and item.offset_us > prev:
                await asyncio.sleep((item.offset_us - prev) / 1e6 / speed)
            prev = item.offset_us
            if position_cb is not None:
                position_cb(item.offset_us)
            if item.rtype == rec.RT_FRAME:
                await conn.send(encode_frame(item.frame))
                name = item.frame.stream.value
                report.frames_published[name] = report.frames_published.get(name, 0) + 1
            elif item.rtype == rec.RT_EVENT:
                await conn.send(encode_event(item.event).decode())
        await conn.send(encode_event(Bye(reason="replay-complete")).decode())

    async with connect(url, max_size=16 * 1024 * 1024, compression=None) as conn:
        await _drive(
            conn,
            nego,
            report,
            lambda f, t: None,
            [pump],
            duration_s=10**9,
            handshake_timeout_s=None,  # wait for a viewer indefinitely
        )
    return report
