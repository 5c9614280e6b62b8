"""Pure-Python kernels: stdlib-only fallback for the compiled extension.

The three functions here sit on the hottest paths in the package:

* ``crc64_update`` touches every byte written to or verified from a
  recording file;
* ``polyline_min_distance`` is the inner loop of eraser hit testing;
* ``equirect_render`` resamples an equirectangular frame into a
  perspective view, once per output pixel, for the guide-view compositor.

``svrs._kernels._native`` implements the same signatures in Cython; the
package picks the fast one at import time.  Keep the two implementations
semantically identical bit for bit.
"""

from __future__ import annotations

import math
from typing import Sequence

# CRC-64/XZ: reflected polynomial, init and xorout both all-ones.
CRC64_POLY = 0xC96C5795D7870F42
CRC64_INIT = 0xFFFFFFFFFFFFFFFF
CRC64_XOROUT = 0xFFFFFFFFFFFFFFFF

_M64 = 0xFFFFFFFFFFFFFFFF


def _make_tables() -> list[list[int]]:
    t0 = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ CRC64_POLY if c & 1 else c >> 1
        t0.append(c)
    tables = [t0]
    for k in range(1, 8):
        prev = tables[k - 1]
        tables.append([(prev[i] >> 8) ^ t0[prev[i] & 0xFF] for i in range(256)])
    return tables


_T = _make_tables()
_T0, _T1, _T2, _T3, _T4, _T5, _T6, _T7 = _T


def crc64_update(state: int, data: bytes) -> int:
    """Fold ``data`` into a running reflected CRC-64/XZ state.

    The caller owns init/xorout: start from ``CRC64_INIT`` and xor the
    final state with ``CRC64_XOROUT`` to get the digest.
    """
    n = len(data)
    i = 0
    # Slicing-by-8 over the aligned middle, per-byte at the tail.
    end8 = n - (n % 8)
    while i < end8:
        x = state ^ int.from_bytes(data[i : i + 8], "little")
        state = (
            _T7[x & 0xFF]
            ^ _T6[(x >> 8) & 0xFF]
            ^ _T5[(x >> 16) & 0xFF]
            ^ _T4[(x >> 24) & 0xFF]
            ^ _T3[(x >> 32) & 0xFF]
            ^ _T2[(x >> 40) & 0xFF]
            ^ _T1[(x >> 48) & 0xFF]
            ^ _T0[(x >> 56) & 0xFF]
        )
        i += 8
    while i < n:
        state = _T0[(state ^ data[i]) & 0xFF] ^ (state >> 8)
        i += 1
    return state & _M64


def _pt_seg_dist(px, py, ax, ay, bx, by) -> float:
    # sqrt(x*x + y*y) rather than hypot: shared formula with the C twin,
    # so the two backends agree bit for bit.
    dx = bx - ax
    dy = by - ay
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        ex = px - ax
        ey = py - ay
        return math.sqrt(ex * ex + ey * ey)
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return math.sqrt(ex * ex + ey * ey)


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segs_intersect(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    # Collinear overlaps and endpoint touches yield zero distance through
    # the point-to-segment terms, so no special casing is needed here.
    return False


def polyline_min_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Minimum Euclidean distance between two polylines.

    ``a`` and ``b`` are flat ``[x0, y0, x1, y1, ...]`` coordinate arrays
    with at least one point each; a single point is a degenerate polyline.
    Crossing segments give distance 0.
    """
    na = len(a) // 2
    nb = len(b) // 2
    if na == 0 or nb == 0:
        raise ValueError("polylines need at least one point")
    best = math.inf
    for i in range(max(na - 1, 1)):
        ax, ay = a[2 * i], a[2 * i + 1]
        j2 = min(2 * i + 2, 2 * (na - 1))
        bx, by = a[j2], a[j2 + 1]
        for j in range(max(nb - 1, 1)):
            cx, cy = b[2 * j], b[2 * j + 1]
            k2 = min(2 * j + 2, 2 * (nb - 1))
            dx, dy = b[k2], b[k2 + 1]
            if _segs_intersect(ax, ay, bx, by, cx, cy, dx, dy):
                return 0.0
            d = _pt_seg_dist(cx, cy, ax, ay, bx, by)
            if d < best:
                best = d
            d = _pt_seg_dist(dx, dy, ax, ay, bx, by)
            if d < best:
                best = d
            d = _pt_seg_dist(ax, ay, cx, cy, dx, dy)
            if d < best:
                best = d
            d = _pt_seg_dist(bx, by, cx, cy, dx, dy)
            if d < best:
                best = d
    return best


def equirect_render(
    src: bytes,
    src_w: int,
    src_h: int,
    yaw: float,
    pitch: float,
    roll: float,
    fov_deg: float,
    out_w: int,
    out_h: int,
) -> bytes:
    """Nearest-neighbor perspective view of an equirectangular RGB frame.

    ``src`` is packed RGB, ``src_w * src_h * 3`` bytes.  ``fov_deg`` is the
    vertical field of view; the horizontal one follows from the output
    aspect ratio.  The camera convention matches ``svrs.viewmath``:
    right-handed, +y up, yaw 0 / pitch 0 looks along -z, positive yaw turns
    right, rays rotate roll, then pitch, then yaw.
    """
    if len(src) != src_w * src_h * 3:
        raise ValueError("src length does not match dimensions")
    cy_, sy_ = math.cos(-yaw), math.sin(-yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    # R = Ry(-yaw) @ Rx(pitch) @ Rz(roll), written out.
    r00 = cy_ * cr + sy_ * sp * sr
    r01 = -cy_ * sr + sy_ * sp * cr
    r02 = sy_ * cp
    r10 = cp * sr
    r11 = cp * cr
    r12 = -sp
    r20 = -sy_ * cr + cy_ * sp * sr
    r21 = sy_ * sr + cy_ * sp * cr
    r22 = cy_ * cp
    tanf = math.tan(math.radians(fov_deg) / 2.0)
    aspect = out_w / out_h
    out = bytearray(out_w * out_h * 3)
    inv_tau = 1.0 / math.tau
    inv_pi = 1.0 / math.pi
    for j in range(out_h):
        py = (1.0 - 2.0 * (j + 0.5) / out_h) * tanf
        for i in range(out_w):
            px = (2.0 * (i + 0.5) / out_w - 1.0) * tanf * aspect
            # camera ray (px, py, -1), rotated
            x = r00 * px + r01 * py - r02
            y = r10 * px + r11 * py - r12
            z = r20 * px + r21 * py - r22
            inv = 1.0 / math.sqrt(x * x + y * y + z * z)
            x *= inv
            y *= inv
            z *= inv
            if y >= 1.0 - 1e-12 or y <= -1.0 + 1e-12:
                u = 0.5
            else:
                u = math.atan2(x, -z) * inv_tau + 0.5
            v = 0.5 - math.asin(max(-1.0, min(1.0, y))) * inv_pi
            xi = int(u * src_w) % src_w
            yi = int(v * src_h)
            if yi >= src_h:
                yi = src_h - 1
            sidx = (yi * src_w + xi) * 3
            didx = (j * out_w + i) * 3
            out[didx] = src[sidx]
            out[didx + 1] = src[sidx + 1]
            out[didx + 2] = src[sidx + 2]
    return bytes(out)
