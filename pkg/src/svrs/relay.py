"""Per-session, per-stream ordered fan-out of media frames.

Each stream of a session runs through one :class:`StreamChannel`: a
bounded ring of contiguous frames with a single writer (the publish
authority) and any number of pull subscribers.  When the ring is full the
drop policy decides:

* ``Lossless`` blocks the publisher until every subscriber has consumed
  the oldest frame (used for must-not-lose feeds, never for live cameras);
* ``DropOldest`` evicts the oldest frame outright (audio default);
* ``DropOldestNonKey`` (video default) also evicts the oldest frame, but a
  key frame that a lagging subscriber (lag within ring capacity) still
  needs is parked in a one-slot anchor instead of vanishing, so the
  subscriber can restart decoding from it.

Subscribers never see duplicates or reordering.  A subscriber that falls
out of the retained window skips forward and records the seqs it missed;
every miss corresponds to a logged eviction, which is the loss-accounting
contract the tests enforce.

Channels are thread-safe; publishes are serialized per channel by an
internal lock, and subscribing or unsubscribing during publishes is safe.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from .model import MAX_PAYLOAD, MediaFrame, PeerRole, PUBLISHABLE, StreamKind


class RelayError(Exception):
    pass


class Unauthorized(RelayError):
    pass


class PayloadTooLarge(RelayError):
    pass


class ChannelFull(RelayError):
    """Lossless publish timed out waiting for subscribers to drain."""


class UnknownSession(RelayError):
    pass


class DropPolicy(enum.Enum):
    Lossless = "Lossless"
    DropOldestNonKey = "DropOldestNonKey"
    DropOldest = "DropOldest"


def default_policy(stream: StreamKind) -> DropPolicy:
    return DropPolicy.DropOldest if stream is StreamKind.Audio else DropPolicy.DropOldestNonKey


@dataclass(frozen=True, slots=True)
class Eviction:
    seq: int
    key: bool
    reason: str  # "drop" | "anchor_replaced"


class Subscription:
    """Pull cursor over a channel; created via :meth:`StreamChannel.subscribe`."""

    def __init__(self, channel: "StreamChannel", cursor: int, evicted_start: bool):
        self.channel = channel
        self.cursor = cursor  # next seq this subscriber wants
        self.start_seq = cursor
        self.evicted_start = evicted_start
        self.delivered = 0
        self.missed: list[int] = []
        self.active = True

    def poll(self, max_frames: Optional[int] = None) -> list[MediaFrame]:
        """Frames since the last poll, in seq order, without blocking."""
        return self.channel._poll(self, max_frames)

    def close(self):
        self.channel.unsubscribe(self)


class StreamChannel:
    def __init__(
        self,
        session: str,
        stream: StreamKind,
        clock: Callable[[], int],
        capacity: int = 64,
        policy: Optional[DropPolicy] = None,
        max_payload: int = MAX_PAYLOAD,
    ):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.session = session
        self.stream = stream
        self.clock = clock
        self.capacity = capacity
        self.policy = policy or default_policy(stream)
        self.max_payload = max_payload
        self.next_seq = 0
        self.latest_ts: Optional[int] = None
        self._ring: list[MediaFrame] = []  # contiguous seqs, oldest first
        self._anchor: Optional[MediaFrame] = None  # parked key frame (NonKey policy)
        self._subs: set[Subscription] = set()
        self.evictions: list[Eviction] = []
        self._lock = threading.Lock()
        self._drained = threading.Condition(self._lock)

    # -- publishing ---------------------------------------------------------

    def publish(
        self,
        payload: bytes,
        content_type: str,
        key: bool = False,
        publisher: Optional[PeerRole] = None,
        timeout: Optional[float] = None,
    ) -> MediaFrame:
        """Stamp, enqueue and return a frame.

        ``publisher`` None means an internal publisher (replay host, tests)
        exempt from the role matrix.  Under Lossless, blocks up to
        ``timeout`` seconds for ring space.
        """
        if publisher is not None and self.stream not in PUBLISHABLE[publisher]:
            raise Unauthorized(f"{publisher.value} may not publish {self.stream.value}")
        if len(payload) > self.max_payload:
            raise PayloadTooLarge(f"{len(payload)} > {self.max_payload}")
        with self._lock:
            if len(self._ring) >= self.capacity:
                self._make_room(timeout)
            ts = self.clock()
            if self.latest_ts is not None and ts < self.latest_ts:
                ts = self.latest_ts
            frame = MediaFrame(
                stream=self.stream,
                seq=self.next_seq,
                ts_us=ts,
                key=key,
                content_type=content_type,
                payload=bytes(payload),
            )
            self.next_seq += 1
            self.latest_ts = ts
            self._ring.append(frame)
            return frame

    def _make_room(self, timeout: Optional[float]):
        if self.policy is DropPolicy.Lossless:
            while len(self._ring) >= self.capacity:
                if self._evict_consumed_prefix():
                    continue
                if not self._drained.wait(timeout):
                    raise ChannelFull(f"{self.stream.value} ring full")
            return
        victim = self._ring.pop(0)
        self.evictions.append(Eviction(victim.seq, victim.key, "drop"))
        if self.policy is DropPolicy.DropOldestNonKey and victim.key:
            if self._key_still_needed(victim.seq):
                if self._anchor is not None:
                    self.evictions.append(
                        Eviction(self._anchor.seq, True, "anchor_replaced")
                    )
                self._anchor = victim

    def _evict_consumed_prefix(self) -> bool:
        if not self._subs:
            floor = self.next_seq
        else:
            floor = min(s.cursor for s in self._subs)
        n = 0
        while self._ring and self._ring[0].seq < floor and len(self._ring) >= self.capacity:
            self._ring.pop(0)
            n += 1
        return n > 0

    def _key_still_needed(self, seq: int) -> bool:
        for s in self._subs:
            if s.cursor <= seq and (self.next_seq - s.cursor) <= self.capacity:
                return True
        return False

    # -- subscribing --------------------------------------------------------

    def subscribe(self, from_seq: Optional[int] = None) -> Subscription:
        """Subscribe from the live edge, or from ``from_seq`` if given.

        A ``from_seq`` that is no longer retained starts the feed at the
        oldest retained key frame instead (oldest retained frame if the
        channel has no key frames), with ``evicted_start`` set.
        """
        with self._lock:
            oldest = self._oldest_retained()
            if from_seq is None:
                cursor, evicted = self.next_seq, False
            elif oldest is None:
                cursor, evicted = self.next_seq, from_seq < self.next_seq
            elif from_seq >= oldest:
                cursor, evicted = from_seq, False
            else:
                cursor, evicted = self._restart_seq(), True
            sub = Subscription(self, cursor, evicted)
            self._subs.add(sub)
            return sub

    def unsubscribe(self, sub: Subscription):
        with self._lock:
            sub.active = False
            self._subs.discard(sub)
            self._drained.notify_all()

    def _oldest_retained(self) -> Optional[int]:
        if self._anchor is not None:
            return self._anchor.seq
        return self._ring[0].seq if self._ring else None

    def _restart_seq(self) -> int:
        if self._anchor is not None:
            return self._anchor.seq
        for f in self._ring:
            if f.key:
                return f.seq
        return self._ring[0].seq if self._ring else self.next_seq

    def _poll(self, sub: Subscription, max_frames: Optional[int]) -> list[MediaFrame]:
        with self._lock:
            if not sub.active:
                raise RelayError("subscription closed")
            out: list[MediaFrame] = []
            budget = max_frames if max_frames is not None else len(self._ring) + 1
            if (
                self._anchor is not None
                and sub.cursor <= self._anchor.seq
                and budget > 0
            ):
                out.append(self._anchor)
                self._mark_missed(sub, sub.cursor, self._anchor.seq)
                sub.cursor = self._anchor.seq + 1
                budget -= 1
            if self._ring and sub.cursor < self._ring[0].seq:
                self._mark_missed(sub, sub.cursor, self._ring[0].seq)
                sub.cursor = self._ring[0].seq
            for f in self._ring:
                if budget <= 0:
                    break
                if f.seq >= sub.cursor:
                    out.append(f)
                    sub.cursor = f.seq + 1
                    budget -= 1
            sub.delivered += len(out)
            if self._anchor is not None and all(
                s.cursor > self._anchor.seq for s in self._subs
            ):
                self._anchor = None
            self._drained.notify_all()
            return out

    @staticmethod
    def _mark_missed(sub: Subscription, lo: int, hi: int):
        sub.missed.extend(range(lo, hi))

    # -- observability ------------------------------------------------------

    def stats(self) -> dict:
        with self._lock:
            return {
                "published": self.next_seq,
                "retained": len(self._ring) + (1 if self._anchor else 0),
                "evicted": len(self.evictions),
                "subscribers": len(self._subs),
                "latest_ts_us": self.latest_ts,
            }


def sync_skew(channels: dict[StreamKind, StreamChannel], at_ts: int) -> dict[StreamKind, Optional[int]]:
    """Per-stream lag report: at_ts minus the latest delivered frame's ts.

    Streams that have not carried a frame yet report None.
    """
    out: dict[StreamKind, Optional[int]] = {}
    for kind, ch in channels.items():
        out[kind] = None if ch.latest_ts is None else at_ts - ch.latest_ts
    return out
