"""Headless client details: image-dir sources and eventless sessions."""

import asyncio

from svrs import recording as rec
from svrs.clients import headless_guide, headless_room
from svrs.config import ServerConfig
from svrs.server import Server
from svrs.testpattern import pattern_jpeg
from svrs.model import StreamKind


async def _run_pair(srv, session, **room_kw):
    url = f"ws://127.0.0.1:{srv.port}/ws/signal/{session}"
    room_task = asyncio.create_task(headless_room(url, session, **room_kw))
    await asyncio.sleep(0.1)
    guide_task = asyncio.create_task(headless_guide(url, session, duration_s=1.5))
    return await asyncio.gather(room_task, guide_task)


async def test_image_dir_source_cycles_gap_free(tmp_path):
    imgdir = tmp_path / "imgs"
    imgdir.mkdir()
    for i in range(3):
        (imgdir / f"f{i}.jpg").write_bytes(
            pattern_jpeg(StreamKind.Site, i, 0, size=(512, 256))
        )
    cfg = ServerConfig(host="127.0.0.1", port=0, recordings_dir=tmp_path / "recs")
    async with Server(cfg) as srv:
        room, guide = await _run_pair(
            srv, "imgdir", fps=10.0, duration_s=1.5, source=str(imgdir)
        )
    # more frames than source images: the directory loops
    assert room.frames_published["Site"] > 3
    await asyncio.sleep(0.2)
    files = list(cfg.recordings_dir.glob("*.svrs"))
    site_seqs = [
        item.frame.seq
        for item in rec.read_records(files[0])
        if item.rtype == rec.RT_FRAME and item.frame.stream is StreamKind.Site
    ]
    assert site_seqs == list(range(len(site_seqs)))  # strictly increasing, gap-free


async def test_empty_script_session_records_frames_only(tmp_path):
    cfg = ServerConfig(host="127.0.0.1", port=0, recordings_dir=tmp_path / "recs")
    async with Server(cfg) as srv:
        room, guide = await _run_pair(srv, "noevents", fps=10.0, duration_s=1.5)
    assert guide.committed == [] and room.committed == []
    await asyncio.sleep(0.2)
    info = rec.verify(next(iter(cfg.recordings_dir.glob("*.svrs"))))
    assert info.counts["annotations"] == 0
    assert info.counts["frames"] > 0


async def test_two_way_audio_without_echo(tmp_path):
    cfg = ServerConfig(host="127.0.0.1", port=0, recordings_dir=tmp_path / "recs")
    async with Server(cfg) as srv:
        url = f"ws://127.0.0.1:{srv.port}/ws/signal/audio-1"
        room_task = asyncio.create_task(
            headless_room(url, "audio-1", fps=5.0, duration_s=2.0, audio=True)
        )
        await asyncio.sleep(0.1)
        guide_task = asyncio.create_task(
            headless_guide(url, "audio-1", duration_s=2.0, audio=True)
        )
        room, guide = await asyncio.gather(room_task, guide_task)

    # both directions carried ~50 chunks/s for ~2 s
    assert room.frames_published["Audio"] > 50
    assert guide.frames_published["Audio"] > 50
    # each side hears only the other side: no echo of its own chunks
    assert room.frames_received["Audio"] <= guide.frames_published["Audio"]
    assert guide.frames_received["Audio"] <= room.frames_published["Audio"]
    assert room.frames_received["Audio"] > 30
    assert guide.frames_received["Audio"] > 30

    # the saved copy carries the merged audio of both directions
    await asyncio.sleep(0.2)
    info = rec.verify(next(iter(cfg.recordings_dir.glob("*.svrs"))))
    audio_records = [
        item
        for item in rec.read_records(info.path)
        if item.rtype == rec.RT_FRAME and item.frame.stream is StreamKind.Audio
    ]
    published_total = room.frames_published["Audio"] + guide.frames_published["Audio"]
    assert len(audio_records) >= published_total * 0.8  # both directions, merged
    assert all(item.frame.content_type.startswith("audio/pcm") for item in audio_records)
