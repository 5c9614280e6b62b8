"""Shared domain vocabulary: identifiers, stream kinds, frames and poses.

Everything in this module is an immutable value; instances may be shared
freely across tasks and threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

MAX_PAYLOAD = 8 * 1024 * 1024
MAX_CONTENT_TYPE = 255
U64_MAX = 2**64 - 1

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9-]{1,64}$")

PROTO_VERSION = 1


class ModelError(ValueError):
    """A value violates its domain invariant."""


class PeerRole(Enum):
    RoomPublisher = "RoomPublisher"
    RemoteGuide = "RemoteGuide"
    ReplayViewer = "ReplayViewer"


class StreamKind(Enum):
    Surround360 = "Surround360"
    Site = "Site"
    Vitals = "Vitals"
    GuideView = "GuideView"
    Audio = "Audio"


# Byte codes used by the binary wire framing and the recording format.
STREAM_CODE = {
    StreamKind.Surround360: 0,
    StreamKind.Site: 1,
    StreamKind.Vitals: 2,
    StreamKind.GuideView: 3,
    StreamKind.Audio: 4,
}
CODE_STREAM = {code: kind for kind, code in STREAM_CODE.items()}

# Streams each role may publish on a live session.  The replay host is
# exempt (it re-publishes every recorded stream, see svrs.server).
PUBLISHABLE = {
    PeerRole.RoomPublisher: frozenset(
        {StreamKind.Surround360, StreamKind.Site, StreamKind.Vitals, StreamKind.Audio}
    ),
    PeerRole.RemoteGuide: frozenset({StreamKind.GuideView, StreamKind.Audio}),
    PeerRole.ReplayViewer: frozenset(),
}

# The two spot streams that can be zoomed and annotated.
ANNOTATABLE = (StreamKind.Site, StreamKind.Vitals)


def validate_session_id(value: str) -> str:
    """Check a session id: 1-64 characters, alphanumeric plus hyphen."""
    if not isinstance(value, str) or not _SESSION_ID_RE.match(value):
        raise ModelError(f"invalid session id: {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class MediaFrame:
    """One opaque timestamped payload on a stream; the unit the relay moves."""

    stream: StreamKind
    seq: int
    ts_us: int
    key: bool
    content_type: str
    payload: bytes

    def __post_init__(self):
        if not isinstance(self.stream, StreamKind):
            raise ModelError(f"bad stream: {self.stream!r}")
        if not 0 <= self.seq <= U64_MAX:
            raise ModelError(f"seq out of range: {self.seq}")
        if not 0 <= self.ts_us <= U64_MAX:
            raise ModelError(f"ts_us out of range: {self.ts_us}")
        if not self.content_type or len(self.content_type.encode()) > MAX_CONTENT_TYPE:
            raise ModelError(f"bad content_type: {self.content_type!r}")
        if len(self.payload) > MAX_PAYLOAD:
            raise ModelError(f"payload too large: {len(self.payload)} bytes")


def _wrap_angle(a: float) -> float:
    # Shortest representative in (-pi, pi].
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True, slots=True)
class ViewPose:
    """Yaw/pitch/roll of the guide's head, radians.

    yaw and roll live in (-pi, pi] and wrap shortest-arc; pitch is clamped
    to [-pi/2, pi/2].  Use :meth:`from_angles` to build a pose from
    unnormalized angles.
    """

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        if not (-math.pi < self.yaw <= math.pi):
            raise ModelError(f"yaw out of range: {self.yaw}")
        if not (-math.pi / 2 <= self.pitch <= math.pi / 2):
            raise ModelError(f"pitch out of range: {self.pitch}")
        if not (-math.pi < self.roll <= math.pi):
            raise ModelError(f"roll out of range: {self.roll}")

    @classmethod
    def from_angles(cls, yaw: float, pitch: float, roll: float) -> "ViewPose":
        return cls(
            yaw=_wrap_angle(yaw),
            pitch=max(-math.pi / 2, min(math.pi / 2, pitch)),
            roll=_wrap_angle(roll),
        )
