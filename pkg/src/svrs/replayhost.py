"""Host a finalized recording as a live, joinable replay session.

Runs the normal server, pre-registers the session in replay mode, and
re-publishes the recording's frames and annotation events through the
regular client interface at offset-paced times.  A ReplayViewer joins the
session exactly like a guide joins a live one; annotations the viewer adds
go to a sidecar recording next to the source, which is never modified.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Optional

from . import recording as rec
from .clients import replay_publisher
from .config import ServerConfig
from .server import Server, Session

log = logging.getLogger("svrs.replay")


async def host_replay(
    cfg: ServerConfig,
    path: Path,
    speed: float = 1.0,
    session_id: Optional[str] = None,
    on_ready=None,
) -> Optional[rec.RecordingInfo]:
    """Serve one replay session to completion; returns sidecar info if any.

    ``on_ready(server)`` fires once the server is listening, before the
    replayer starts waiting for a viewer.
    """
    records = rec.read_records(path)  # verifies before anything is served
    info = rec.verify(path)
    sid = session_id or info.session_id

    async with Server(cfg) as srv:
        if on_ready is not None:
            on_ready(srv)
        session = Session(sid, cfg, replay=True)
        session.replay_session = rec.ReplaySession(path, speed=speed)
        srv.hub.sessions[sid] = session
        url = f"ws://{cfg.host}:{srv.port}/ws/signal/{sid}"
        log.info(
            "hosting replay of %s (%d records, speed=%s) at %s; waiting for a viewer",
            path,
            len(records),
            "inf" if speed == math.inf else speed,
            url,
        )

        def track_position(offset_us: int):
            session.replay_session.position_us = offset_us

        await replay_publisher(url, sid, records, speed, position_cb=track_position)
        sidecar = session.replay_session.finalize_sidecar()
        if sidecar is not None:
            log.info("review annotations saved to %s", sidecar.path)
        return sidecar
