"""The session server: WebSocket control/media endpoints plus HTTP.

Endpoints:

* ``ws://host:port/ws/signal/<session-id>``: the session channel.  Text
  messages are canonical-encoded signal and annotation events; binary
  messages are wire-framed media frames (see :mod:`svrs.wire`).
* ``GET /healthz``: liveness probe.
* ``GET /metrics``: plain-text counters and per-stream sync skew.
* ``GET /recordings``: JSON list of finalized recordings.
* ``GET /recordings/<name>``: raw .svrs bytes.
* ``GET /debug/annotations/<session-id>``: authoritative annotation
  state digest, for client convergence checks.
* ``GET /app/...``: the browser console, when a frontend build is found.

One asyncio task runs per connection; per-session state is guarded by the
session's lock, which makes the server the single authority that orders
signal transitions, stamps frames, and sequences annotation events.  Every
accepted frame and committed event goes to the session recording, which is
finalized when the session closes for any reason.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from dataclasses import dataclass, field
from http import HTTPStatus
from pathlib import Path
from typing import Optional

from websockets.asyncio.server import ServerConnection, serve as ws_serve
from websockets.datastructures import Headers
from websockets.exceptions import ConnectionClosed
from websockets.http11 import Request, Response

from . import annotations as ann
from . import recording as rec
from . import relay
from . import signaling as sig
from .config import ServerConfig
from .events import (
    ANNOTATION_TYPES,
    Bye,
    ErrorNotice,
    Hello,
    MalformedEvent,
    Rejected,
    SIGNAL_TYPES,
    SignalMessage,
    decode_event,
    encode_event,
    stamp,
)
from .model import PeerRole, StreamKind
from .wire import WireError, decode_frame, encode_frame

log = logging.getLogger("svrs.server")

WS_PREFIX = "/ws/signal/"


@dataclass
class Peer:
    role: PeerRole
    conn: ServerConnection
    wake: asyncio.Event = field(default_factory=asyncio.Event)
    subscriptions: dict = field(default_factory=dict)  # StreamKind -> Subscription
    pump_task: Optional[asyncio.Task] = None


class Session:
    def __init__(self, sid: str, cfg: ServerConfig, replay: bool = False):
        self.id = sid
        self.cfg = cfg
        self.state = sig.SignalingState(
            session=sid, proto_version=cfg.proto_version, replay=replay
        )
        self.lock = asyncio.Lock()
        self.peers: dict[PeerRole, Peer] = {}
        self.channels: dict[StreamKind, relay.StreamChannel] = {}
        self.annot = ann.empty_state()
        self.t0_ns = time.monotonic_ns()
        self.recorder: Optional[rec.RecordingWriter] = None
        self.recording_path: Optional[Path] = None
        self.replay_session: Optional[rec.ReplaySession] = None
        self.overlay_seq = 0
        self.closed = asyncio.Event()
        self.frames_relayed = 0
        self.events_committed = 0
        # audio is one shared channel both peers publish into; remember who
        # published which seq so peers never hear themselves back
        self.audio_publishers: dict[int, PeerRole] = {}

    def clock_us(self) -> int:
        return (time.monotonic_ns() - self.t0_ns) // 1000

    def channel(self, kind: StreamKind) -> relay.StreamChannel:
        if kind not in self.channels:
            self.channels[kind] = relay.StreamChannel(
                self.id,
                kind,
                self.clock_us,
                capacity=self.cfg.ring_capacity,
                max_payload=self.cfg.max_payload,
            )
        return self.channels[kind]

    def ensure_recorder(self) -> rec.RecordingWriter:
        if self.recorder is None:
            name = f"{self.id}-{time.time_ns() // 1000}.svrs"
            self.recording_path = self.cfg.recordings_dir / name
            self.recorder = rec.RecordingWriter(self.recording_path, self.id)
        return self.recorder

    def delivery_set(self, role: PeerRole) -> frozenset[StreamKind]:
        """Streams this peer receives: what it requested and the peer acked."""
        requested = self.state.requested_by(role) or frozenset()
        other = next(iter(self.state.peers - {role}), None)
        acked = self.state.acked_by(other) if other else None
        return requested & (acked or frozenset())


class SessionHub:
    """Registry of live sessions; one entry per session id."""

    def __init__(self, cfg: ServerConfig):
        self.cfg = cfg
        self.sessions: dict[str, Session] = {}

    def get_or_create(self, sid: str) -> Session:
        if sid not in self.sessions:
            self.sessions[sid] = Session(sid, self.cfg)
        return self.sessions[sid]

    def get(self, sid: str) -> Optional[Session]:
        return self.sessions.get(sid)

    def remove(self, sid: str):
        self.sessions.pop(sid, None)

    def sync_skew(self, sid: str, at_ts: Optional[int] = None):
        """Per-stream lag report for one session; see relay.sync_skew."""
        session = self.sessions.get(sid)
        if session is None:
            raise relay.UnknownSession(sid)
        return relay.sync_skew(session.channels, session.clock_us() if at_ts is None else at_ts)


async def _send(peer: Peer, data):
    try:
        await peer.conn.send(data)
    except ConnectionClosed:
        pass


async def _route(session: Session, outbound):
    for role, msg in outbound:
        peer = session.peers.get(role)
        if peer is not None:
            await _send(peer, encode_event(msg).decode())


async def _pump(session: Session, peer: Peer):
    """Drain this peer's subscriptions and push frames in order."""
    try:
        while True:
            await peer.wake.wait()
            peer.wake.clear()
            for kind, sub in list(peer.subscriptions.items()):
                for frame in sub.poll():
                    if (
                        kind is StreamKind.Audio
                        and session.audio_publishers.get(frame.seq) is peer.role
                    ):
                        continue  # echo suppression
                    await _send(peer, encode_frame(frame))
            if session.state.phase >= sig.SessionPhase.Closing:
                return
    except asyncio.CancelledError:
        pass


def _wire_streaming(session: Session):
    """Session just reached Streaming: wire subscriptions and pumps."""
    for role, peer in session.peers.items():
        for kind in session.delivery_set(role):
            if kind not in peer.subscriptions:
                peer.subscriptions[kind] = session.channel(kind).subscribe()
        if peer.pump_task is None:
            peer.pump_task = asyncio.get_running_loop().create_task(_pump(session, peer))


async def _teardown(hub: SessionHub, session: Session, reason: str):
    """Closing -> finalize recording, drop peers, mark Closed, deregister."""
    if session.closed.is_set():
        return
    session.closed.set()
    log.info("session %s closing: %s", session.id, reason)
    for peer in session.peers.values():
        if peer.pump_task is not None:
            peer.pump_task.cancel()
        peer.wake.set()
    if session.recorder is not None:
        try:
            session.recorder.finalize()
        except rec.RecordingError as exc:
            log.error("session %s: recording finalize failed: %s", session.id, exc)
    if session.state.phase == sig.SessionPhase.Closing:
        session.state = sig.mark_closed(session.state)
    for peer in list(session.peers.values()):
        try:
            await peer.conn.close()
        except Exception:
            pass
    hub.remove(session.id)


async def _handle_signal_message(
    hub: SessionHub, session: Session, sender: Optional[PeerRole], msg: SignalMessage, conn
) -> Optional[PeerRole]:
    """Run one signal message through the state machine, under the lock.

    Returns the role assigned to this connection when ``msg`` is its Hello.
    """
    assigned: Optional[PeerRole] = None
    async with session.lock:
        prev_phase = session.state.phase
        try:
            nxt, outbound = sig.handle_signal(session.state, sender, msg)
        except sig.ProtocolError as exc:
            notice = encode_event(ErrorNotice(code=exc.code.value, detail=exc.detail)).decode()
            try:
                await conn.send(notice)
            except ConnectionClosed:
                pass
            if sender is None:
                # A connection that never joined: refuse it, keep the session.
                await conn.close(code=1002, reason=exc.code.value)
                return None
            session.state = sig.force_closing(session.state)
            await _route(session, [(r, Bye(reason=exc.code.value)) for r in session.peers])
            asyncio.get_running_loop().create_task(
                _teardown(hub, session, f"protocol error {exc.code.value}")
            )
            return None
        session.state = nxt
        if isinstance(msg, Hello) and sender is None:
            assigned = msg.role
            session.peers[msg.role] = Peer(role=msg.role, conn=conn)
            if not session.state.replay:
                # replay sessions re-serve an existing copy; only live
                # sessions produce a new recording
                session.ensure_recorder()
        if session.recorder is not None:
            session.recorder.append_signal(msg, session.clock_us())
        await _route(session, outbound)
        if prev_phase < sig.SessionPhase.Streaming and nxt.phase == sig.SessionPhase.Streaming:
            _wire_streaming(session)
            log.info("session %s streaming", session.id)
        if nxt.phase == sig.SessionPhase.Closing:
            asyncio.get_running_loop().create_task(_teardown(hub, session, "bye"))
    return assigned


async def _handle_annotation(session: Session, sender: Optional[PeerRole], e, conn):
    if sender is None:
        await conn.send(
            encode_event(ErrorNotice(code="HelloNotFirst", detail=type(e).__name__)).decode()
        )
        return
    async with session.lock:
        if session.state.phase != sig.SessionPhase.Streaming:
            await _send(
                session.peers[sender],
                encode_event(Rejected(code="NotStreaming", detail=type(e).__name__)).decode(),
            )
            return
        if session.state.replay:
            await _handle_replay_annotation(session, sender, e)
            return
        next_seq = 0 if session.annot.last_seq is None else session.annot.last_seq + 1
        ch = session.channels.get(e.stream)
        latest = ch.next_seq - 1 if ch is not None and ch.next_seq > 0 else None
        candidate = stamp(e, next_seq, session.clock_us(), frame_seq=latest)
        try:
            session.annot, effects = ann.apply(session.annot, candidate)
        except ann.InvalidInContext as exc:
            await _send(
                session.peers[sender],
                encode_event(Rejected(code="InvalidInContext", detail=str(exc))).decode(),
            )
            return
        session.events_committed += 1
        if session.recorder is not None:
            session.recorder.append_event(candidate, session.clock_us())
        data = encode_event(candidate).decode()
        for peer in session.peers.values():
            await _send(peer, data)


async def _handle_replay_annotation(session: Session, sender: PeerRole, e):
    """Replay-mode annotation routing (caller holds the session lock).

    The replayer re-publishes the original log verbatim (already stamped,
    gap-free); the authority folds it so the debug digest tracks it.  A
    viewer's annotations go to the sidecar in their own seq space and are
    echoed back committed; the source recording stays untouched.
    """
    if sender is PeerRole.RoomPublisher:
        try:
            session.annot, _ = ann.apply(session.annot, e)
        except ann.AnnotError as exc:
            log.warning("session %s: replayed event did not fold: %s", session.id, exc)
        session.events_committed += 1
        data = encode_event(e).decode()
        for peer in session.peers.values():
            await _send(peer, data)
        return
    rs = session.replay_session
    if rs is None:
        await _send(
            session.peers[sender],
            encode_event(Rejected(code="NoReplaySource", detail="")).decode(),
        )
        return
    ch = session.channels.get(e.stream)
    latest = ch.next_seq - 1 if ch is not None and ch.next_seq > 0 else None
    stamped = stamp(e, session.overlay_seq, session.clock_us(), frame_seq=latest)
    session.overlay_seq += 1
    rs.annotate(stamped)
    await _send(session.peers[sender], encode_event(stamped).decode())


async def _handle_frame(session: Session, sender: Optional[PeerRole], data: bytes, conn):
    if sender is None:
        await conn.close(code=1002, reason="HelloNotFirst")
        return
    frame_in = decode_frame(data)
    async with session.lock:
        if session.state.phase != sig.SessionPhase.Streaming:
            return  # frames before/after Streaming are dropped
        publisher = None if session.state.replay else sender
        try:
            stamped = session.channel(frame_in.stream).publish(
                frame_in.payload,
                frame_in.content_type,
                key=frame_in.key,
                publisher=publisher,
            )
        except relay.Unauthorized as exc:
            await _send(
                session.peers[sender],
                encode_event(Rejected(code="Unauthorized", detail=str(exc))).decode(),
            )
            return
        except relay.PayloadTooLarge as exc:
            await _send(
                session.peers[sender],
                encode_event(Rejected(code="PayloadTooLarge", detail=str(exc))).decode(),
            )
            return
        session.frames_relayed += 1
        if frame_in.stream is StreamKind.Audio:
            session.audio_publishers[stamped.seq] = sender
            if len(session.audio_publishers) > 4 * session.cfg.ring_capacity:
                for seq in sorted(session.audio_publishers)[: 2 * session.cfg.ring_capacity]:
                    del session.audio_publishers[seq]
        if session.recorder is not None:
            session.recorder.append_frame(stamped, session.clock_us())
        for peer in session.peers.values():
            if frame_in.stream in peer.subscriptions:
                peer.wake.set()


async def _connection_handler(hub: SessionHub, conn: ServerConnection):
    path = conn.request.path if conn.request else ""
    sid = path[len(WS_PREFIX) :]
    try:
        from .model import validate_session_id

        validate_session_id(sid)
    except Exception:
        await conn.close(code=1008, reason="bad session id")
        return
    session = hub.get_or_create(sid)
    role: Optional[PeerRole] = None
    try:
        async for message in conn:
            if isinstance(message, bytes):
                try:
                    await _handle_frame(session, role, message, conn)
                except WireError as exc:
                    await conn.send(
                        encode_event(ErrorNotice(code="MalformedFrame", detail=str(exc))).decode()
                    )
                continue
            try:
                event = decode_event(message)
            except MalformedEvent as exc:
                await conn.send(
                    encode_event(ErrorNotice(code="MalformedEvent", detail=str(exc))).decode()
                )
                continue
            if isinstance(event, SIGNAL_TYPES):
                assigned = await _handle_signal_message(hub, session, role, event, conn)
                if assigned is not None:
                    role = assigned
            elif isinstance(event, ANNOTATION_TYPES):
                await _handle_annotation(session, role, event, conn)
            else:
                await conn.send(
                    encode_event(
                        ErrorNotice(code="UnexpectedMessage", detail=type(event).__name__)
                    ).decode()
                )
    except ConnectionClosed:
        pass
    finally:
        if role is not None and not session.closed.is_set():
            # a joined peer vanished: treat as Bye and close the session
            async with session.lock:
                if session.state.phase < sig.SessionPhase.Closing:
                    session.state = sig.force_closing(session.state)
                    await _route(
                        session,
                        [(r, Bye(reason="peer-disconnected")) for r in session.peers if r != role],
                    )
            await _teardown(hub, session, f"{role.value} disconnected")


# ---------------------------------------------------------------------------
# HTTP side


def _response(status: HTTPStatus, body: bytes, content_type: str) -> Response:
    headers = Headers(
        [
            ("Content-Type", content_type),
            ("Content-Length", str(len(body))),
            ("Cache-Control", "no-store"),
        ]
    )
    return Response(status.value, status.phrase, headers, body)


def _metrics_text(hub: SessionHub) -> str:
    lines = [f"sessions {len(hub.sessions)}"]
    for sid, s in sorted(hub.sessions.items()):
        lines.append(f'session{{id="{sid}"}} phase={s.state.phase.name}')
        lines.append(f'frames_relayed{{id="{sid}"}} {s.frames_relayed}')
        lines.append(f'events_committed{{id="{sid}"}} {s.events_committed}')
        skew = relay.sync_skew(s.channels, s.clock_us())
        for kind, lag in sorted(skew.items(), key=lambda kv: kv[0].value):
            lag_s = "nan" if lag is None else str(lag)
            lines.append(f'sync_skew_us{{id="{sid}",stream="{kind.value}"}} {lag_s}')
        for kind, ch in sorted(s.channels.items(), key=lambda kv: kv[0].value):
            st = ch.stats()
            lines.append(
                f'stream{{id="{sid}",stream="{kind.value}"}} '
                f"published={st['published']} evicted={st['evicted']}"
            )
    return "\n".join(lines) + "\n"


def _recordings_json(hub: SessionHub, cfg: ServerConfig) -> bytes:
    open_paths = {
        s.recording_path for s in hub.sessions.values() if s.recording_path is not None
    }
    out = []
    for p in sorted(cfg.recordings_dir.glob("*.svrs")):
        entry = {"file": p.name, "size": p.stat().st_size}
        if p in open_paths:
            entry["status"] = "recording"
            out.append(entry)
            continue
        try:
            info = rec.verify(p)
            entry.update(
                session=info.session_id,
                records=info.records,
                counts=info.counts,
                wallclock_start_us=info.wallclock_start_us,
            )
        except rec.RecordingError as exc:
            entry["error"] = type(exc).__name__
        out.append(entry)
    return json.dumps(out, indent=1).encode()


def make_process_request(hub: SessionHub, cfg: ServerConfig, static_dir: Optional[Path]):
    def process_request(conn: ServerConnection, request: Request):
        path = request.path.split("?", 1)[0]
        if path.startswith(WS_PREFIX):
            return None  # continue with the WebSocket handshake
        if path == "/healthz":
            return conn.respond(HTTPStatus.OK, "ok\n")
        if path == "/metrics":
            return _response(HTTPStatus.OK, _metrics_text(hub).encode(), "text/plain")
        if path == "/recordings":
            return _response(HTTPStatus.OK, _recordings_json(hub, cfg), "application/json")
        if path.startswith("/recordings/"):
            name = path[len("/recordings/") :]
            target = cfg.recordings_dir / name
            if "/" in name or ".." in name or not target.is_file():
                return conn.respond(HTTPStatus.NOT_FOUND, "no such recording\n")
            return _response(HTTPStatus.OK, target.read_bytes(), "application/octet-stream")
        if path.startswith("/debug/annotations/"):
            sid = path[len("/debug/annotations/") :]
            session = hub.get(sid)
            if session is None:
                return conn.respond(HTTPStatus.NOT_FOUND, "no such session\n")
            body = json.dumps(
                {
                    "session": sid,
                    "digest": ann.state_digest(session.annot),
                    "last_seq": session.annot.last_seq,
                }
            ).encode()
            return _response(HTTPStatus.OK, body, "application/json")
        if path == "/":
            return _response(HTTPStatus.OK, _INDEX_HTML, "text/html")
        if static_dir is not None and path.startswith("/app/"):
            return _static_file(static_dir, path[len("/app/") :] or "index.html")
        return conn.respond(HTTPStatus.NOT_FOUND, "not found\n")

    def _static_file(root: Path, name: str):
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            return conn_respond_404()
        ctype = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".map": "application/json",
        }.get(target.suffix, "application/octet-stream")
        return _response(HTTPStatus.OK, target.read_bytes(), ctype)

    def conn_respond_404():
        return _response(HTTPStatus.NOT_FOUND, b"not found\n", "text/plain")

    return process_request


_INDEX_HTML = b"""<!doctype html>
<html><head><title>svrs</title></head>
<body>
<h1>svrs session server</h1>
<ul>
<li><a href="/app/room.html">room simulator</a></li>
<li><a href="/app/guide.html">guide console</a></li>
<li><a href="/recordings">recordings</a></li>
<li><a href="/metrics">metrics</a></li>
</ul>
</body></html>
"""


def find_static_dir() -> Optional[Path]:
    for candidate in (
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
        Path("frontend/dist"),
    ):
        if candidate.is_dir():
            return candidate
    return None


class Server:
    """A running service; use as an async context manager or via serve()."""

    def __init__(self, cfg: ServerConfig, static_dir: Optional[Path] = None):
        cfg.ensure_recordings_dir()
        self.cfg = cfg
        self.hub = SessionHub(cfg)
        self.static_dir = static_dir if static_dir is not None else find_static_dir()
        self._server = None

    async def __aenter__(self):
        self._server = await ws_serve(
            lambda conn: _connection_handler(self.hub, conn),
            self.cfg.host,
            self.cfg.port,
            process_request=make_process_request(self.hub, self.cfg, self.static_dir),
            max_size=self.cfg.max_payload + 64 * 1024,
            compression=None,
            ping_interval=20,
            ping_timeout=20,
        )
        return self

    async def __aexit__(self, *exc):
        self._server.close()
        await self._server.wait_closed()

    @property
    def port(self) -> int:
        return next(iter(self._server.sockets)).getsockname()[1]

    async def serve_forever(self):
        await asyncio.get_running_loop().create_future()


async def run_server(cfg: ServerConfig):
    async with Server(cfg) as srv:
        log.info("listening on %s:%s", cfg.host, srv.port)
        await srv.serve_forever()
