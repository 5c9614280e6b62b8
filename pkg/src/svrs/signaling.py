"""Connection-ID session establishment: a pure, total transition function.

Either side opens the session by sending Hello with the shared session id.
Once both peers are present, each advertises the streams it can publish,
the other requests a subset, and the advertiser acknowledges; when both
directions have acknowledged, the session is Streaming.  Bye (or a
transport disconnect, which the server injects as Bye) moves any phase to
Closing; the server marks Closed after teardown.

``handle_signal`` is referentially transparent and never mutates its
input: it either returns the next state plus the messages to deliver, or
raises :class:`ProtocolError` (in which case the caller decides whether to
refuse one connection or close the session: errors raised for a sender
that is not an established peer refuse only that connection).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .events import Bye, Hello, SignalMessage, StreamAck, StreamAdvertise, StreamRequest
from .model import PeerRole


class SessionPhase(enum.IntEnum):
    # IntEnum: tests assert monotone ordering of transitions.
    Idle = 0
    AwaitingPeer = 1
    Negotiating = 2
    Streaming = 3
    Closing = 4
    Closed = 5


class ErrorCode(str, enum.Enum):
    HelloNotFirst = "HelloNotFirst"
    DuplicateRole = "DuplicateRole"
    RoleNotAllowed = "RoleNotAllowed"
    VersionMismatch = "VersionMismatch"
    SessionMismatch = "SessionMismatch"
    RequestExceedsAdvertise = "RequestExceedsAdvertise"
    AckExceedsRequest = "AckExceedsRequest"
    WrongPhase = "WrongPhase"
    MessageAfterClosed = "MessageAfterClosed"


class ProtocolError(Exception):
    def __init__(self, code: ErrorCode, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code.value}: {detail}" if detail else code.value)


# Which roles may share a live session / a replay session.
LIVE_ROLES = frozenset({PeerRole.RoomPublisher, PeerRole.RemoteGuide})
REPLAY_ROLES = frozenset({PeerRole.RoomPublisher, PeerRole.ReplayViewer})


@dataclass(frozen=True, slots=True)
class SignalingState:
    """Immutable per-session signaling snapshot threaded by the server."""

    session: str
    proto_version: int = 1
    replay: bool = False
    phase: SessionPhase = SessionPhase.Idle
    peers: frozenset[PeerRole] = frozenset()
    advertised: tuple = ()  # ((role, frozenset[(StreamKind, str)]), ...)
    requested: tuple = ()  # ((role, frozenset[StreamKind]), ...)
    acked: tuple = ()  # ((role, frozenset[StreamKind]), ...)

    def advertised_by(self, role: PeerRole):
        return dict(self.advertised).get(role)

    def requested_by(self, role: PeerRole):
        return dict(self.requested).get(role)

    def acked_by(self, role: PeerRole):
        return dict(self.acked).get(role)

    @property
    def allowed_roles(self) -> frozenset[PeerRole]:
        return REPLAY_ROLES if self.replay else LIVE_ROLES


def initiate(session: str, role: PeerRole, proto_version: int = 1) -> Hello:
    """The Hello either side sends first; symmetric in role."""
    return Hello(session=session, role=role, proto_version=proto_version)


Outbound = list[tuple[PeerRole, SignalMessage]]


def _with_entry(entries: tuple, role: PeerRole, value) -> tuple:
    d = dict(entries)
    d[role] = value
    return tuple(sorted(d.items(), key=lambda kv: kv[0].value))


def _other(state: SignalingState, role: PeerRole) -> PeerRole | None:
    rest = state.peers - {role}
    return next(iter(rest)) if rest else None


def _negotiation_complete(state: SignalingState) -> bool:
    # One direction is complete when the advertiser has acked the peer's
    # request.  Streaming needs both directions acked.
    if len(state.peers) != 2:
        return False
    return all(state.acked_by(r) is not None for r in state.peers)


def handle_signal(
    state: SignalingState, sender: PeerRole | None, msg: SignalMessage
) -> tuple[SignalingState, Outbound]:
    """Advance the session state machine by one message.

    ``sender`` is None for a connection that has not completed Hello yet;
    afterwards it is the connection's declared role.
    """
    if state.phase == SessionPhase.Closed:
        raise ProtocolError(ErrorCode.MessageAfterClosed, type(msg).__name__)
    if state.phase == SessionPhase.Closing:
        # Teardown already underway: drop everything quietly.
        return state, []

    if isinstance(msg, Hello):
        return _handle_hello(state, sender, msg)
    if sender is None or sender not in state.peers:
        raise ProtocolError(ErrorCode.HelloNotFirst, type(msg).__name__)
    if isinstance(msg, Bye):
        return replace(state, phase=SessionPhase.Closing), [
            (r, msg) for r in state.peers if r != sender
        ]

    if isinstance(msg, StreamAdvertise):
        if state.phase != SessionPhase.Negotiating:
            raise ProtocolError(ErrorCode.WrongPhase, "StreamAdvertise")
        nxt = replace(state, advertised=_with_entry(state.advertised, sender, msg.streams))
        return nxt, [(_other(state, sender), msg)]

    if isinstance(msg, StreamRequest):
        if state.phase != SessionPhase.Negotiating:
            raise ProtocolError(ErrorCode.WrongPhase, "StreamRequest")
        peer = _other(state, sender)
        adv = state.advertised_by(peer)
        if adv is None or not msg.streams <= {kind for kind, _ in adv}:
            raise ProtocolError(ErrorCode.RequestExceedsAdvertise)
        nxt = replace(state, requested=_with_entry(state.requested, sender, msg.streams))
        return nxt, [(peer, msg)]

    if isinstance(msg, StreamAck):
        if state.phase != SessionPhase.Negotiating:
            raise ProtocolError(ErrorCode.WrongPhase, "StreamAck")
        peer = _other(state, sender)
        req = state.requested_by(peer)
        if req is None or not msg.streams <= req:
            raise ProtocolError(ErrorCode.AckExceedsRequest)
        nxt = replace(state, acked=_with_entry(state.acked, sender, msg.streams))
        if _negotiation_complete(nxt):
            nxt = replace(nxt, phase=SessionPhase.Streaming)
        return nxt, [(peer, msg)]

    raise ProtocolError(ErrorCode.WrongPhase, type(msg).__name__)


def _handle_hello(
    state: SignalingState, sender: PeerRole | None, msg: Hello
) -> tuple[SignalingState, Outbound]:
    if sender is not None:
        # A peer that already said Hello must not say it again.
        raise ProtocolError(ErrorCode.DuplicateRole, msg.role.value)
    if msg.session != state.session:
        raise ProtocolError(ErrorCode.SessionMismatch, msg.session)
    if msg.proto_version != state.proto_version:
        raise ProtocolError(
            ErrorCode.VersionMismatch, f"want {state.proto_version}, got {msg.proto_version}"
        )
    if msg.role not in state.allowed_roles:
        raise ProtocolError(ErrorCode.RoleNotAllowed, msg.role.value)
    if msg.role in state.peers:
        raise ProtocolError(ErrorCode.DuplicateRole, msg.role.value)
    if state.phase not in (SessionPhase.Idle, SessionPhase.AwaitingPeer):
        raise ProtocolError(ErrorCode.WrongPhase, "Hello")

    peers = state.peers | {msg.role}
    if len(peers) == 1:
        return replace(state, phase=SessionPhase.AwaitingPeer, peers=peers), []
    # Second, complementary peer: each side learns the other arrived.
    other = next(iter(state.peers))
    nxt = replace(state, phase=SessionPhase.Negotiating, peers=peers)
    out: Outbound = [(other, msg), (msg.role, initiate(state.session, other, state.proto_version))]
    return nxt, out


def force_closing(state: SignalingState) -> SignalingState:
    """Jump to Closing from any phase (protocol error or disconnect)."""
    if state.phase in (SessionPhase.Closing, SessionPhase.Closed):
        return state
    return replace(state, phase=SessionPhase.Closing)


def mark_closed(state: SignalingState) -> SignalingState:
    """Teardown finished; only reachable from Closing."""
    if state.phase != SessionPhase.Closing:
        raise ProtocolError(ErrorCode.WrongPhase, "close before Closing")
    return replace(state, phase=SessionPhase.Closed)
