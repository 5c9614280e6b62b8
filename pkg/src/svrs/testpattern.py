"""Synthetic camera frames with machine-readable pixel metadata.

The headless room publishes JPEG test patterns; end-to-end tests decode
the received pixels to recover which frame they are looking at and when it
was generated, without trusting any header fields.  The top 16 pixel rows
carry 16 bytes (magic, stream code, u48 seq, u64 ts, little-endian) as 128
black/white 8x8 blocks, two rows of 64, LSB first.  8x8 blocks sit exactly
on JPEG DCT blocks, so the bits survive compression comfortably.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import Optional

from PIL import Image, ImageDraw

from .model import CODE_STREAM, STREAM_CODE, StreamKind

MAGIC = 0xA5
BLOCK = 8
COLS = 64
STRIP_ROWS = 2
MIN_WIDTH = COLS * BLOCK  # 512
PATTERN_SIZE = (512, 256)

_STREAM_TINT = {
    StreamKind.Surround360: (40, 90, 160),
    StreamKind.Site: (160, 60, 40),
    StreamKind.Vitals: (40, 140, 70),
    StreamKind.GuideView: (120, 90, 150),
    StreamKind.Audio: (90, 90, 90),
}


@dataclass(frozen=True, slots=True)
class PatternInfo:
    stream: StreamKind
    seq: int
    ts_us: int


def _meta_bytes(stream: StreamKind, seq: int, ts_us: int) -> bytes:
    return (
        bytes([MAGIC, STREAM_CODE[stream]])
        + struct.pack("<Q", seq & (2**48 - 1))[:6]
        + struct.pack("<Q", ts_us)
    )


def make_pattern(
    stream: StreamKind, seq: int, ts_us: int, size: tuple[int, int] = PATTERN_SIZE
) -> Image.Image:
    w, h = size
    if w < MIN_WIDTH or h < STRIP_ROWS * BLOCK + 32:
        raise ValueError(f"pattern size {size} too small for the metadata strip")
    tint = _STREAM_TINT[stream]
    img = Image.new("RGB", size, tint)
    draw = ImageDraw.Draw(img)

    # body: diagonal gradient plus a bar that sweeps with seq
    strip_h = STRIP_ROWS * BLOCK
    for y in range(strip_h, h, 8):
        shade = int(40 + 160 * (y - strip_h) / max(1, h - strip_h))
        draw.rectangle(
            [0, y, w, min(y + 8, h)],
            fill=(shade * tint[0] // 160, shade * tint[1] // 160, shade * tint[2] // 160),
        )
    bar_x = (seq * 16) % max(1, w - 24)
    draw.rectangle([bar_x, strip_h, bar_x + 24, h], fill=(250, 250, 250))
    draw.text((8, h - 20), f"{stream.value} #{seq}", fill=(255, 255, 255))

    meta = _meta_bytes(stream, seq, ts_us)
    for bit_index in range(len(meta) * 8):
        bit = (meta[bit_index // 8] >> (bit_index % 8)) & 1
        col = bit_index % COLS
        row = bit_index // COLS
        x0, y0 = col * BLOCK, row * BLOCK
        draw.rectangle(
            [x0, y0, x0 + BLOCK - 1, y0 + BLOCK - 1], fill=(255, 255, 255) if bit else (0, 0, 0)
        )
    return img


def pattern_jpeg(
    stream: StreamKind,
    seq: int,
    ts_us: int,
    size: tuple[int, int] = PATTERN_SIZE,
    quality: int = 90,
) -> bytes:
    buf = io.BytesIO()
    make_pattern(stream, seq, ts_us, size).save(buf, "JPEG", quality=quality)
    return buf.getvalue()


def read_pattern(jpeg: bytes) -> Optional[PatternInfo]:
    """Recover the embedded metadata, or None if there is none."""
    img = Image.open(io.BytesIO(jpeg)).convert("L")
    if img.width < MIN_WIDTH or img.height < STRIP_ROWS * BLOCK:
        return None
    px = img.load()
    out = bytearray(16)
    for bit_index in range(128):
        col = bit_index % COLS
        row = bit_index // COLS
        x0, y0 = col * BLOCK, row * BLOCK
        total = 0
        for dy in (2, 4, 5):  # sample the block interior, away from edges
            for dx in (2, 4, 5):
                total += px[x0 + dx, y0 + dy]
        if total / 9 > 127:
            out[bit_index // 8] |= 1 << (bit_index % 8)
    if out[0] != MAGIC or out[1] not in CODE_STREAM:
        return None
    seq = struct.unpack("<Q", bytes(out[2:8]) + b"\x00\x00")[0]
    ts_us = struct.unpack("<Q", bytes(out[8:16]))[0]
    return PatternInfo(stream=CODE_STREAM[out[1]], seq=seq, ts_us=ts_us)
