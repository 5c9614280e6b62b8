"""Canonical encoding: golden bytes, round trips, malformed input."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svrs import events as ev
from svrs.model import PeerRole, StreamKind

SITE = StreamKind.Site
VITALS = StreamKind.Vitals


GOLDEN = [
    (ev.Undo(stream=SITE), b'{"stream":"Site","type":"Undo"}'),
    (ev.Redo(stream=VITALS), b'{"stream":"Vitals","type":"Redo"}'),
    (
        ev.stamp(ev.Undo(stream=SITE), 3, 1234),
        b'{"seq":3,"stream":"Site","ts_us":1234,"type":"Undo"}',
    ),
    (
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.5, 0.5)),
        b'{"color":[255,32,32,255],"point":[0.500000,0.500000],"stream":"Site",'
        b'"tool":"Pencil","type":"BeginShape","width":0.004000}',
    ),
    (
        ev.Erase(stream=VITALS, path=((0.1, 0.2), (0.3, 0.4)), radius=0.05),
        b'{"path":[[0.100000,0.200000],[0.300000,0.400000]],"radius":0.050000,'
        b'"stream":"Vitals","type":"Erase"}',
    ),
    (
        ev.Hello(session="abc-123", role=PeerRole.RoomPublisher),
        b'{"proto_version":1,"role":"RoomPublisher","session":"abc-123","type":"Hello"}',
    ),
    (
        ev.StreamRequest(streams=frozenset({SITE, VITALS})),
        b'{"streams":["Site","Vitals"],"type":"StreamRequest"}',
    ),
    (ev.Bye(reason="done"), b'{"reason":"done","type":"Bye"}'),
]


@pytest.mark.parametrize("event,expected", GOLDEN, ids=lambda x: str(x)[:40])
def test_golden_bytes(event, expected):
    assert ev.encode_event(event) == expected


def test_encoding_is_deterministic():
    e = ev.BeginShape(stream=SITE, tool=ev.Tool.Oval, point=(0.25, 0.75))
    assert ev.encode_event(e) == ev.encode_event(e)


def _random_event(rng: random.Random):
    stream = rng.choice([SITE, VITALS])
    q = lambda: round(rng.random(), 6)
    point = lambda: (q(), q())
    stamps = {}
    if rng.random() < 0.5:
        stamps = {"seq": rng.randrange(2**32), "ts_us": rng.randrange(2**40)}
    kind = rng.randrange(9)
    if kind == 0:
        return ev.ZoomIn(stream=stream, **stamps)
    if kind == 1:
        return ev.ZoomOut(stream=stream, **stamps)
    if kind == 2:
        return ev.BeginShape(
            stream=stream,
            tool=rng.choice(list(ev.Tool)),
            point=point(),
            color=tuple(rng.randrange(256) for _ in range(4)),
            width=round(rng.uniform(1e-6, 0.1), 6),
            frame_seq=rng.randrange(10**6) if rng.random() < 0.5 else None,
            **stamps,
        )
    if kind == 3:
        return ev.ExtendShape(stream=stream, point=point(), **stamps)
    if kind == 4:
        return ev.EndShape(stream=stream, **stamps)
    if kind == 5:
        return ev.Erase(
            stream=stream,
            path=tuple(point() for _ in range(rng.randrange(1, 6))),
            radius=round(rng.uniform(1e-6, 0.1), 6),
            **stamps,
        )
    if kind == 6:
        return ev.Undo(stream=stream, **stamps)
    if kind == 7:
        return ev.Redo(stream=stream, **stamps)
    return ev.PlayPauseScreenshot(
        stream=stream,
        frame_seq=rng.randrange(10**6) if rng.random() < 0.5 else None,
        **stamps,
    )


def test_round_trip_1000_random_events():
    rng = random.Random(20240811)
    for _ in range(1000):
        e = _random_event(rng)
        b = ev.encode_event(e)
        assert ev.decode_event(b) == e
        # canonical idempotence on the image of encode
        assert ev.encode_event(ev.decode_event(b)) == b


def test_round_trip_signal_messages():
    msgs = [
        ev.Hello(session="s" * 64, role=PeerRole.ReplayViewer, proto_version=7),
        ev.StreamAdvertise(
            streams=frozenset(
                {
                    (StreamKind.Surround360, "image/jpeg"),
                    (SITE, "image/jpeg"),
                    (StreamKind.Audio, "audio/pcm;rate=16000"),
                }
            )
        ),
        ev.StreamRequest(streams=frozenset()),
        ev.StreamAck(streams=frozenset({StreamKind.Audio})),
        ev.Bye(),
        ev.Rejected(code="InvalidInContext", detail="nothing to undo"),
        ev.ErrorNotice(code="VersionMismatch"),
    ]
    for m in msgs:
        b = ev.encode_event(m)
        assert ev.decode_event(b) == m
        assert ev.encode_event(ev.decode_event(b)) == b


def test_decode_accepts_noncanonical_spellings():
    e = ev.decode_event(b'{ "type": "Undo",\n "stream": "Site" }')
    assert e == ev.Undo(stream=SITE)


@pytest.mark.parametrize(
    "data",
    [
        b"",
        b"{",
        b'{"stream":"Site","type":"Undo"',  # truncated
        b'"Undo"',
        b"[]",
        b'{"stream":"Site"}',  # no type
        b'{"stream":"Site","type":"Teleport"}',  # unknown type
        b'{"stream":"Lobby","type":"Undo"}',  # unknown stream
        b'{"stream":"Surround360","type":"Undo"}',  # not annotatable
        b'{"stream":"Site","type":"Undo","extra":1}',  # unknown field
        b'{"seq":-1,"stream":"Site","type":"Undo"}',
        b'{"seq":1.5,"stream":"Site","type":"Undo"}',
        b'{"point":[1.500000,0.000000],"stream":"Site","type":"ExtendShape"}',  # range
        b'{"point":[0.1234567,0.000000],"stream":"Site","type":"ExtendShape"}',  # off-grid
        b'{"path":[],"radius":0.010000,"stream":"Site","type":"Erase"}',
        b'{"path":[[0.1,0.1]],"radius":0.200000,"stream":"Site","type":"Erase"}',
        b'\xff\xfe',
    ],
)
def test_malformed(data):
    with pytest.raises(ev.MalformedEvent):
        ev.decode_event(data)


norm_floats = st.integers(min_value=0, max_value=10**6).map(lambda n: n / 10**6)


@settings(max_examples=300, deadline=None)
@given(
    stream=st.sampled_from([SITE, VITALS]),
    u=norm_floats,
    v=norm_floats,
    seq=st.none() | st.integers(min_value=0, max_value=2**64 - 1),
)
def test_extend_round_trip_property(stream, u, v, seq):
    e = ev.ExtendShape(stream=stream, point=(u, v), seq=seq, ts_us=None if seq is None else 1)
    assert ev.decode_event(ev.encode_event(e)) == e


def test_quantize_contract():
    assert ev.quantize(0.1234567) == 0.123457
    assert ev.quantize(-0.0) == 0.0
    with pytest.raises(Exception):
        ev.ExtendShape(stream=SITE, point=(0.1234567, 0.0))
