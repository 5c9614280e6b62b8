"""Pixel-embedded frame metadata and the guide-view compositor."""

import random

import pytest

from svrs import compositor, testpattern as tp
from svrs.model import StreamKind, ViewPose


def test_metadata_survives_jpeg():
    rng = random.Random(8)
    for _ in range(30):
        stream = rng.choice(list(tp._STREAM_TINT))
        seq = rng.randrange(2**48)
        ts = rng.randrange(2**60)
        for quality in (75, 90):
            info = tp.read_pattern(tp.pattern_jpeg(stream, seq, ts, quality=quality))
            assert info == tp.PatternInfo(stream=stream, seq=seq, ts_us=ts)


def test_plain_image_yields_none():
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.new("RGB", (512, 256), (90, 90, 90)).save(buf, "JPEG")
    assert tp.read_pattern(buf.getvalue()) is None


def test_small_image_yields_none():
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.new("RGB", (64, 64)).save(buf, "JPEG")
    assert tp.read_pattern(buf.getvalue()) is None


def test_pattern_size_guard():
    with pytest.raises(ValueError):
        tp.make_pattern(StreamKind.Site, 0, 0, size=(128, 64))


def test_compositor_produces_jpeg_with_and_without_sources():
    surround = tp.pattern_jpeg(StreamKind.Surround360, 1, 10)
    site = tp.pattern_jpeg(StreamKind.Site, 1, 10)
    out = compositor.compose_guide_view(surround, site, None, ViewPose(yaw=0.3))
    assert out[:2] == b"\xff\xd8"  # JPEG SOI
    out_dark = compositor.compose_guide_view(None, None, None, ViewPose())
    assert out_dark[:2] == b"\xff\xd8"


def test_compositor_view_changes_with_pose():
    surround = tp.pattern_jpeg(StreamKind.Surround360, 3, 30)
    a = compositor.compose_guide_view(surround, None, None, ViewPose(yaw=0.0))
    b = compositor.compose_guide_view(surround, None, None, ViewPose(yaw=1.5))
    assert a != b
