"""Binary frame framing: golden layout and round trips."""

import random
import struct

import pytest

from svrs import wire
from svrs.model import MediaFrame, StreamKind


def test_golden_layout():
    f = MediaFrame(
        stream=StreamKind.Site,
        seq=7,
        ts_us=1_000_000,
        key=True,
        content_type="image/jpeg",
        payload=b"\xde\xad\xbe\xef",
    )
    b = wire.encode_frame(f)
    expect = (
        bytes([0x01, 0x01])  # record type, Site code
        + struct.pack("<Q", 7)
        + struct.pack("<Q", 1_000_000)
        + bytes([1])
        + struct.pack("<H", 10)
        + b"image/jpeg"
        + struct.pack("<I", 4)
        + b"\xde\xad\xbe\xef"
    )
    assert b == expect
    assert wire.decode_frame(b) == f


def test_stream_codes():
    for kind, code in [
        (StreamKind.Surround360, 0),
        (StreamKind.Site, 1),
        (StreamKind.Vitals, 2),
        (StreamKind.GuideView, 3),
        (StreamKind.Audio, 4),
    ]:
        f = MediaFrame(
            stream=kind, seq=0, ts_us=0, key=False, content_type="x/y", payload=b""
        )
        assert wire.encode_frame(f)[1] == code


def test_round_trip_random():
    rng = random.Random(3)
    kinds = list(StreamKind)
    for _ in range(300):
        f = MediaFrame(
            stream=rng.choice(kinds),
            seq=rng.randrange(2**64),
            ts_us=rng.randrange(2**64),
            key=rng.random() < 0.5,
            content_type=rng.choice(["image/jpeg", "audio/pcm;rate=16000", "a/b"]),
            payload=rng.randbytes(rng.randrange(0, 2000)),
        )
        assert wire.decode_frame(wire.encode_frame(f)) == f


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b[:-1],  # truncated payload
        lambda b: b[:5],  # truncated header
        lambda b: b"\x02" + b[1:],  # wrong record type
        lambda b: b[:1] + b"\x09" + b[2:],  # unknown stream code
        lambda b: b + b"\x00",  # trailing garbage
        lambda b: b"",
    ],
)
def test_malformed_frames(mutate):
    f = MediaFrame(
        stream=StreamKind.Audio, seq=1, ts_us=2, key=False, content_type="a/b", payload=b"xyz"
    )
    with pytest.raises(wire.WireError):
        wire.decode_frame(mutate(wire.encode_frame(f)))
