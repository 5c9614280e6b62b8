"""Relay ordering, drop accounting, and concurrency safety."""

import hashlib
import threading

import pytest

from svrs import relay
from svrs.model import PeerRole, StreamKind


class FakeClock:
    def __init__(self):
        self.now = 0

    def __call__(self):
        return self.now


def make_channel(capacity=64, policy=None, stream=StreamKind.Site):
    clock = FakeClock()
    ch = relay.StreamChannel("s", stream, clock, capacity=capacity, policy=policy)
    return ch, clock


def test_first_publish_is_seq_zero():
    ch, _ = make_channel()
    f = ch.publish(b"x", "image/jpeg")
    assert f.seq == 0


def test_thousand_publishes_monotone():
    ch, clock = make_channel(capacity=2000)
    last_ts = -1
    for i in range(1000):
        clock.now += i % 3  # occasionally equal timestamps
        f = ch.publish(b"p%d" % i, "image/jpeg")
        assert f.seq == i
        assert f.ts_us >= last_ts
        last_ts = f.ts_us


def test_role_matrix_enforced():
    ch, _ = make_channel()
    with pytest.raises(relay.Unauthorized):
        ch.publish(b"x", "image/jpeg", publisher=PeerRole.RemoteGuide)
    ch.publish(b"x", "image/jpeg", publisher=PeerRole.RoomPublisher)
    gv, _ = make_channel(stream=StreamKind.GuideView)
    with pytest.raises(relay.Unauthorized):
        gv.publish(b"x", "image/jpeg", publisher=PeerRole.RoomPublisher)
    gv.publish(b"x", "image/jpeg", publisher=PeerRole.RemoteGuide)


def test_payload_too_large():
    ch, _ = make_channel()
    with pytest.raises(relay.PayloadTooLarge):
        ch.publish(b"x" * (relay.MAX_PAYLOAD + 1), "application/octet-stream")


def test_subscribe_latest_then_publish():
    ch, _ = make_channel()
    sub = ch.subscribe()
    assert sub.poll() == []
    f = ch.publish(b"hello", "image/jpeg")
    assert sub.poll() == [f]
    assert sub.poll() == []


def test_slow_subscriber_drop_oldest_gap_structure():
    ch, _ = make_channel(capacity=4, policy=relay.DropPolicy.DropOldest)
    sub = ch.subscribe()
    for i in range(10):
        ch.publish(b"f%d" % i, "audio/pcm")
    frames = sub.poll()
    seqs = [f.seq for f in frames]
    assert seqs == [6, 7, 8, 9]  # suffix only
    assert sub.missed == [0, 1, 2, 3, 4, 5]  # one contiguous gap at the front
    evicted = {e.seq for e in ch.evictions}
    assert set(sub.missed) <= evicted
    assert sub.delivered + len(sub.missed) == ch.next_seq


def test_two_subscribers_agree_on_order():
    ch, _ = make_channel(capacity=8)
    a = ch.subscribe()
    b = ch.subscribe()
    seen_a, seen_b = [], []
    for i in range(50):
        ch.publish(b"%d" % i, "image/jpeg", key=(i % 10 == 0))
        if i % 3 == 0:
            seen_a.extend(f.seq for f in a.poll())
        if i % 7 == 0:
            seen_b.extend(f.seq for f in b.poll())
    seen_a.extend(f.seq for f in a.poll())
    seen_b.extend(f.seq for f in b.poll())
    assert seen_a == sorted(set(seen_a))
    assert seen_b == sorted(set(seen_b))
    common = set(seen_a) & set(seen_b)
    assert [s for s in seen_a if s in common] == [s for s in seen_b if s in common]


def test_no_phantom_frames_hash_check():
    ch, _ = make_channel(capacity=16)
    sub = ch.subscribe()
    published = {}
    for i in range(200):
        payload = b"payload-%d" % i
        f = ch.publish(payload, "image/jpeg")
        published[f.seq] = hashlib.sha256(payload).hexdigest()
        for g in sub.poll():
            assert hashlib.sha256(g.payload).hexdigest() == published[g.seq]


def test_loss_accounting_exact():
    ch, _ = make_channel(capacity=4, policy=relay.DropPolicy.DropOldest)
    sub = ch.subscribe()
    delivered = []
    for i in range(100):
        ch.publish(b"%d" % i, "audio/pcm")
        if i % 9 == 0:
            delivered.extend(sub.poll())
    delivered.extend(sub.poll())
    got = {f.seq for f in delivered}
    missed = set(sub.missed)
    assert got | missed == set(range(100))
    assert not (got & missed)
    assert missed <= {e.seq for e in ch.evictions}


def test_nonkey_policy_parks_needed_key_frame():
    ch, _ = make_channel(capacity=4, policy=relay.DropPolicy.DropOldestNonKey)
    sub = ch.subscribe()
    ch.publish(b"k0", "image/jpeg", key=True)  # seq 0
    for i in range(1, 7):
        ch.publish(b"f%d" % i, "image/jpeg")  # evicts 0,1,2 by seq 6
    frames = sub.poll()
    seqs = [f.seq for f in frames]
    # The lagging subscriber still receives key frame 0 via the anchor,
    # then continues at the retained suffix.
    assert seqs[0] == 0 and frames[0].key
    assert seqs == [0, 3, 4, 5, 6]
    assert sub.missed == [1, 2]
    assert sub.delivered + len(sub.missed) == ch.next_seq


def test_evicted_from_seq_restarts_at_retained_key():
    ch, _ = make_channel(capacity=8, policy=relay.DropPolicy.DropOldestNonKey)
    for i in range(20):
        ch.publish(b"%d" % i, "image/jpeg", key=(i % 5 == 0))
    sub = ch.subscribe(from_seq=2)  # long gone
    assert sub.evicted_start
    seqs = [f.seq for f in sub.poll()]
    assert seqs[0] == 15  # oldest retained key frame
    assert seqs == list(range(15, 20))


def test_lossless_blocks_until_drain():
    ch, _ = make_channel(capacity=2, policy=relay.DropPolicy.Lossless)
    sub = ch.subscribe()
    ch.publish(b"0", "x/y")
    ch.publish(b"1", "x/y")
    with pytest.raises(relay.ChannelFull):
        ch.publish(b"2", "x/y", timeout=0.05)

    done = threading.Event()

    def drain():
        sub.poll()
        done.set()

    t = threading.Timer(0.1, drain)
    t.start()
    f = ch.publish(b"2", "x/y", timeout=5.0)  # unblocked by the drain
    assert f.seq == 2
    done.wait(2.0)
    t.join()


def test_concurrent_subscribe_unsubscribe_during_publish():
    ch, _ = make_channel(capacity=32)
    stop = threading.Event()
    errors = []

    def publisher():
        i = 0
        while not stop.is_set():
            ch.publish(b"%d" % i, "image/jpeg", key=(i % 16 == 0))
            i += 1

    def churn():
        try:
            while not stop.is_set():
                sub = ch.subscribe()
                frames = sub.poll()
                seqs = [f.seq for f in frames]
                assert seqs == sorted(seqs)
                sub.close()
        except Exception as exc:  # surfaces in the main thread
            errors.append(exc)

    threads = [threading.Thread(target=publisher)] + [
        threading.Thread(target=churn) for _ in range(3)
    ]
    for t in threads:
        t.start()
    import time

    time.sleep(0.5)
    stop.set()
    for t in threads:
        t.join()
    assert not errors


def test_sync_skew_report():
    clock = FakeClock()
    chans = {
        kind: relay.StreamChannel("s", kind, clock)
        for kind in (StreamKind.Site, StreamKind.Vitals)
    }
    clock.now = 1000
    chans[StreamKind.Site].publish(b"s", "image/jpeg")
    chans[StreamKind.Vitals].publish(b"v", "image/jpeg")
    skew = relay.sync_skew(chans, at_ts=1000)
    assert skew == {StreamKind.Site: 0, StreamKind.Vitals: 0}
    # Site publishes at 10 fps, Vitals at 1 fps; query mid-interval.
    for t in range(1000, 2_001_000, 100_000):
        clock.now = t
        chans[StreamKind.Site].publish(b"s", "image/jpeg")
    clock.now = 1_001_000
    chans[StreamKind.Vitals].publish(b"v", "image/jpeg")
    at = 2_400_000
    skew = relay.sync_skew(chans, at_ts=at)
    assert skew[StreamKind.Vitals] >= skew[StreamKind.Site]


def test_sync_skew_empty_stream_is_none():
    clock = FakeClock()
    chans = {StreamKind.Audio: relay.StreamChannel("s", StreamKind.Audio, clock)}
    assert relay.sync_skew(chans, at_ts=5)[StreamKind.Audio] is None
