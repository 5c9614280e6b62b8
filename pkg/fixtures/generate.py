#!/usr/bin/env python3
"""Regenerate the committed fixture files.

Run from the repo root: ``python3 fixtures/generate.py``.  Outputs are
deterministic; the test suite asserts the committed copies match what the
library produces, and the browser console tests consume the same files.
"""

import json
import random
from pathlib import Path

from svrs import events as ev
from svrs import recording as rec
from svrs import viewmath as vm
from svrs.model import StreamKind

HERE = Path(__file__).parent


def equirect_golden(n=1000, seed=20260810):
    """(direction, uv) pairs covering the sphere, poles included."""
    rng = random.Random(seed)
    pairs = []
    specials = [
        (0.0, 0.0, -1.0),
        (0.0, 1.0, 0.0),
        (0.0, -1.0, 0.0),
        (1.0, 0.0, 0.0),
        (-1.0, 0.0, 0.0),
        (0.0, 0.0, 1.0),
    ]
    for d in specials:
        pairs.append({"dir": list(d), "uv": list(vm.dir_to_uv(d))})
    while len(pairs) < n:
        u = rng.random()
        v = rng.random()
        d = vm.uv_to_dir(u, v)
        pairs.append({"dir": list(d), "uv": list(vm.dir_to_uv(d))})
    out = HERE / "equirect_golden.json"
    out.write_text(json.dumps(pairs, indent=0) + "\n")
    print(f"wrote {out} ({len(pairs)} pairs)")


GESTURES = {
    # tool name -> the committed event sequence its console gesture emits
    # (authority stamps: seq from 0, ts 1000us apart, frame_seq omitted)
    "zoom_in": [ev.ZoomIn(stream=StreamKind.Site)],
    "pencil": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.BeginShape(
            stream=StreamKind.Site,
            tool=ev.Tool.Pencil,
            point=(0.2, 0.3),
            color=(255, 32, 32, 255),
            width=0.004,
        ),
        ev.ExtendShape(stream=StreamKind.Site, point=(0.3, 0.35)),
        ev.ExtendShape(stream=StreamKind.Site, point=(0.4, 0.3)),
        ev.EndShape(stream=StreamKind.Site),
    ],
    "oval": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.BeginShape(
            stream=StreamKind.Site,
            tool=ev.Tool.Oval,
            point=(0.4, 0.4),
            color=(32, 255, 32, 255),
            width=0.006,
        ),
        ev.ExtendShape(stream=StreamKind.Site, point=(0.6, 0.55)),
        ev.EndShape(stream=StreamKind.Site),
    ],
    "rectangle": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.BeginShape(
            stream=StreamKind.Site,
            tool=ev.Tool.Rectangle,
            point=(0.25, 0.25),
            color=(32, 32, 255, 255),
            width=0.004,
        ),
        ev.ExtendShape(stream=StreamKind.Site, point=(0.75, 0.6)),
        ev.EndShape(stream=StreamKind.Site),
    ],
    "arrow": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.BeginShape(
            stream=StreamKind.Site,
            tool=ev.Tool.Arrow,
            point=(0.3, 0.7),
            color=(255, 200, 32, 255),
            width=0.005,
        ),
        ev.ExtendShape(stream=StreamKind.Site, point=(0.55, 0.45)),
        ev.EndShape(stream=StreamKind.Site),
    ],
    "eraser": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.Erase(stream=StreamKind.Site, path=((0.3, 0.3), (0.5, 0.5)), radius=0.02),
    ],
    "undo_redo": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.BeginShape(
            stream=StreamKind.Site,
            tool=ev.Tool.Pencil,
            point=(0.5, 0.5),
            color=(255, 32, 32, 255),
            width=0.004,
        ),
        ev.EndShape(stream=StreamKind.Site),
        ev.Undo(stream=StreamKind.Site),
        ev.Redo(stream=StreamKind.Site),
    ],
    "play_pause_screenshot": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.PlayPauseScreenshot(stream=StreamKind.Site),
    ],
    "zoom_out": [
        ev.ZoomIn(stream=StreamKind.Site),
        ev.ZoomOut(stream=StreamKind.Site),
    ],
}


def gesture_transcripts():
    from svrs import annotations as ann

    gdir = HERE / "golden_gestures"
    gdir.mkdir(exist_ok=True)
    digests = {}
    for name, events in GESTURES.items():
        # proposal form: what the console sends (unstamped)
        proposal = b"\n".join(ev.encode_event(e) for e in events) + b"\n"
        (gdir / f"{name}.proposal.txt").write_bytes(proposal)
        # committed form: what every peer receives back
        stamped = [ev.stamp(e, i, (i + 1) * 1000) for i, e in enumerate(events)]
        committed = b"\n".join(ev.encode_event(e) for e in stamped) + b"\n"
        (gdir / f"{name}.committed.txt").write_bytes(committed)
        digests[name] = ann.state_digest(ann.rebuild(stamped))
    (gdir / "digests.json").write_text(json.dumps(digests, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(GESTURES)} gesture transcripts to {gdir}")


def example_recording():
    """The hex-annotated example from docs/FORMATS.md, byte for byte."""
    out = HERE / "example.svrs"
    w = rec.RecordingWriter(out, "demo-1", wallclock_start_us=1_700_000_000_000_000)
    w.append_signal(
        ev.Hello(session="demo-1", role=__import__("svrs").model.PeerRole.RoomPublisher), 0
    )
    from svrs.model import MediaFrame

    w.append_frame(
        MediaFrame(
            stream=StreamKind.Site,
            seq=0,
            ts_us=33_000,
            key=True,
            content_type="image/jpeg",
            payload=b"\xff\xd8\xff\xd9",  # smallest JPEG-shaped stand-in
        ),
        33_000,
    )
    w.append_event(ev.stamp(ev.ZoomIn(stream=StreamKind.Site), 0, 50_000), 50_000)
    info = w.finalize()
    print(f"wrote {out} ({info.records} records, crc64 {info.crc64:016x})")


if __name__ == "__main__":
    equirect_golden()
    gesture_transcripts()
    example_recording()
