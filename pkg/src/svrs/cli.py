"""Operator CLI: serve, replay, inspect, verify, and the headless clients.

Exit codes: 0 success, 1 operational failure (with a diagnostic on
stderr), 2 usage errors (argparse).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import sys
from pathlib import Path

from . import recording as rec
from .config import ConfigError, load_config


def _config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="config file (also honored via SURVIVRS_CONFIG)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--recordings-dir")
    p.add_argument("--ring-capacity", type=int)
    p.add_argument("--max-payload", type=int)
    p.add_argument("--proto-version", type=int)
    p.add_argument("--log-level", choices=["debug", "info", "warning", "error"])


def _load(args) -> "ServerConfig":
    from .config import ServerConfig  # noqa: F401  (type only)

    return load_config(
        args.config,
        host=args.host,
        port=args.port,
        recordings_dir=args.recordings_dir,
        ring_capacity=args.ring_capacity,
        max_payload=args.max_payload,
        proto_version=args.proto_version,
        log_level=args.log_level,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svrs", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("serve", help="run the session server")
    _config_flags(sp)

    rp = sub.add_parser("replay", help="host a recording as a joinable replay session")
    rp.add_argument("file", help="finalized .svrs recording")
    rp.add_argument("--speed", default="1", help="playback factor, or 'inf'")
    rp.add_argument("--session", help="session id to host (default: recording's id)")
    _config_flags(rp)

    ip = sub.add_parser("inspect", help="dump a recording to human-readable text")
    ip.add_argument("file")
    ip.add_argument("--limit", type=int, default=None, help="print at most N records")

    vp = sub.add_parser("verify", help="checksum and invariant audit of a recording")
    vp.add_argument("file")

    recp = sub.add_parser("recover", help="salvage the valid prefix of a damaged recording")
    recp.add_argument("file")
    recp.add_argument("output")

    roomp = sub.add_parser("room", help="headless room publisher")
    roomp.add_argument("--url", default="ws://127.0.0.1:8765")
    roomp.add_argument("--session", required=True)
    roomp.add_argument("--fps", type=float, default=10.0)
    roomp.add_argument("--duration", type=float, default=10.0)
    roomp.add_argument("--source", default="test-pattern", help="'test-pattern' or an image dir")
    roomp.add_argument("--audio", action="store_true", help="publish and request two-way audio")
    roomp.add_argument("--transcript", help="write committed events here")

    guidep = sub.add_parser("guide", help="headless remote guide")
    guidep.add_argument("--url", default="ws://127.0.0.1:8765")
    guidep.add_argument("--session", required=True)
    guidep.add_argument("--duration", type=float, default=10.0)
    guidep.add_argument("--gv-fps", type=float, default=5.0)
    guidep.add_argument("--script", help="JSON script of timed events/poses")
    guidep.add_argument("--audio", action="store_true", help="publish and request two-way audio")
    guidep.add_argument("--transcript", help="write committed events here")
    guidep.add_argument(
        "--replay", action="store_true", help="join as ReplayViewer (for hosted replays)"
    )
    return p


def _cmd_serve(args) -> int:
    from .server import run_server

    cfg = _load(args)
    logging.basicConfig(level=getattr(logging, cfg.log_level.upper()))
    try:
        asyncio.run(run_server(cfg))
    except OSError as exc:
        print(f"error: BindFailure: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_replay(args) -> int:
    from .replayhost import host_replay

    speed = math.inf if args.speed in ("inf", "max") else float(args.speed)
    if not speed > 0:
        print("error: speed must be positive", file=sys.stderr)
        return 1
    cfg = _load(args)
    logging.basicConfig(level=getattr(logging, cfg.log_level.upper()))
    path = Path(args.file)
    if not path.exists():
        print(f"error: FileNotFound: {path}", file=sys.stderr)
        return 1
    try:
        asyncio.run(host_replay(cfg, path, speed, session_id=args.session))
    except rec.RecordingError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_inspect(args) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"error: FileNotFound: {path}", file=sys.stderr)
        return 1
    try:
        info = rec.verify(path)
        records = rec.read_records(path)
    except rec.RecordingError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"session:   {info.session_id}")
    print(f"wallclock: {info.wallclock_start_us} us since epoch")
    print(f"records:   {info.records} ({info.counts})")
    print(f"crc64:     {info.crc64:016x}")
    names = {rec.RT_FRAME: "frame", rec.RT_EVENT: "annot", rec.RT_SIGNAL: "signal"}
    shown = records if args.limit is None else records[: args.limit]
    for i, item in enumerate(shown):
        if item.rtype == rec.RT_FRAME:
            f = item.frame
            detail = (
                f"{f.stream.value} seq={f.seq} ts={f.ts_us} key={int(f.key)} "
                f"{f.content_type} {len(f.payload)}B"
            )
        else:
            from .events import encode_event

            detail = encode_event(item.event).decode()
        print(f"#{i:<6} {names[item.rtype]:<6} +{item.offset_us:<12} {detail}")
    if args.limit is not None and len(records) > args.limit:
        print(f"... {len(records) - args.limit} more")
    return 0


def _cmd_verify(args) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"error: FileNotFound: {path}", file=sys.stderr)
        return 1
    try:
        info = rec.verify(path)
    except rec.RecordingError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(
        f"ok: {info.records} records "
        f"(frames={info.counts['frames']} annotations={info.counts['annotations']} "
        f"signals={info.counts['signals']}) session={info.session_id}"
    )
    return 0


def _cmd_recover(args) -> int:
    src, dst = Path(args.file), Path(args.output)
    if not src.exists():
        print(f"error: FileNotFound: {src}", file=sys.stderr)
        return 1
    info = rec.recover_truncated(src, dst)
    print(f"recovered {info.records} records -> {dst}")
    return 0


def _cmd_room(args) -> int:
    from .clients import HandshakeError, headless_room

    try:
        report = asyncio.run(
            headless_room(
                f"{args.url}/ws/signal/{args.session}",
                args.session,
                fps=args.fps,
                duration_s=args.duration,
                source=args.source,
                audio=args.audio,
            )
        )
    except HandshakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.transcript:
        report.write_transcript(Path(args.transcript))
    print(
        f"published={report.frames_published} received={report.frames_received} "
        f"events={len(report.committed)}"
    )
    return 0


def _parse_script(path: str) -> list:
    from .clients import ScriptItem
    from .events import decode_event
    from .model import ViewPose

    items = []
    for entry in json.loads(Path(path).read_text()):
        pose = None
        event = None
        if "pose" in entry:
            pose = ViewPose.from_angles(
                entry["pose"].get("yaw", 0.0),
                entry["pose"].get("pitch", 0.0),
                entry["pose"].get("roll", 0.0),
            )
        if "event" in entry:
            event = decode_event(json.dumps(entry["event"]))
        items.append(ScriptItem(at_ms=float(entry["at_ms"]), event=event, pose=pose))
    return items


def _cmd_guide(args) -> int:
    from .clients import HandshakeError, headless_guide
    from .model import PeerRole

    script = _parse_script(args.script) if args.script else []
    role = PeerRole.ReplayViewer if args.replay else PeerRole.RemoteGuide
    try:
        report = asyncio.run(
            headless_guide(
                f"{args.url}/ws/signal/{args.session}",
                args.session,
                script=script,
                duration_s=args.duration,
                gv_fps=args.gv_fps,
                role=role,
                audio=args.audio,
            )
        )
    except HandshakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.transcript:
        report.write_transcript(Path(args.transcript))
    for r in report.rejections:
        print(f"rejected: {r}")
    print(
        f"published={report.frames_published} received={report.frames_received} "
        f"events={len(report.committed)} rejections={len(report.rejections)}"
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {
            "serve": _cmd_serve,
            "replay": _cmd_replay,
            "inspect": _cmd_inspect,
            "verify": _cmd_verify,
            "recover": _cmd_recover,
            "room": _cmd_room,
            "guide": _cmd_guide,
        }[args.verb](args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
