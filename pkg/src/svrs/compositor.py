"""Headless guide-view composition.

Builds the return stream the room sees: the guide's current perspective
into the 360° feed, with the two spot streams pinned as thumbnails near
the upper corners, mirroring the guide console layout.
"""

from __future__ import annotations

import io
from typing import Optional

from PIL import Image

from . import _kernels
from .model import ViewPose

GUIDE_VIEW_SIZE = (320, 180)
THUMB_WIDTH = 72
DEFAULT_FOV_DEG = 90.0


def _decode(jpeg: Optional[bytes]) -> Optional[Image.Image]:
    if not jpeg:
        return None
    try:
        return Image.open(io.BytesIO(jpeg)).convert("RGB")
    except Exception:
        return None


def compose_guide_view(
    surround_jpeg: Optional[bytes],
    site_jpeg: Optional[bytes],
    vitals_jpeg: Optional[bytes],
    pose: ViewPose,
    fov_deg: float = DEFAULT_FOV_DEG,
    size: tuple[int, int] = GUIDE_VIEW_SIZE,
    quality: int = 80,
) -> bytes:
    """JPEG of the guide's viewpoint composited from the latest frames."""
    out_w, out_h = size
    surround = _decode(surround_jpeg)
    if surround is not None:
        rgb = _kernels.equirect_render(
            surround.tobytes(),
            surround.width,
            surround.height,
            pose.yaw,
            pose.pitch,
            pose.roll,
            fov_deg,
            out_w,
            out_h,
        )
        canvas = Image.frombytes("RGB", size, rgb)
    else:
        canvas = Image.new("RGB", size, (12, 12, 16))

    margin = 4
    for jpeg, left in ((site_jpeg, True), (vitals_jpeg, False)):
        thumb = _decode(jpeg)
        if thumb is None:
            continue
        th = max(1, THUMB_WIDTH * thumb.height // max(1, thumb.width))
        thumb = thumb.resize((THUMB_WIDTH, th))
        x = margin if left else out_w - THUMB_WIDTH - margin
        canvas.paste(thumb, (x, margin))

    buf = io.BytesIO()
    canvas.save(buf, "JPEG", quality=quality)
    return buf.getvalue()
