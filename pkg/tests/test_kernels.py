"""Pure and native kernels must agree with each other and with references."""

import math
import random
from array import array

import pytest

from svrs import _kernels
from svrs._kernels import pure
from svrs import viewmath as vm
from svrs.model import ViewPose

native = pytest.importorskip("svrs._kernels._native", reason="native kernels not built")


def test_crc64_check_value():
    # published check value for CRC-64/XZ
    assert _kernels.crc64(b"123456789") == 0x995DC9BBDF1939FA


def test_crc64_pure_native_agree():
    rng = random.Random(11)
    state_p = pure.CRC64_INIT
    state_n = native.CRC64_INIT
    for n in (0, 1, 2, 7, 8, 9, 15, 16, 17, 255, 4096, 70001):
        chunk = rng.randbytes(n)
        state_p = pure.crc64_update(state_p, chunk)
        state_n = native.crc64_update(state_n, chunk)
        assert state_p == state_n


def test_crc64_chaining_equals_oneshot():
    rng = random.Random(12)
    data = rng.randbytes(10000)
    whole = _kernels.crc64(data)
    part = _kernels.crc64(data[:3333])
    part = _kernels.crc64(data[3333:], part)
    assert part == whole


def _random_polyline(rng, max_pts=8):
    n = rng.randrange(1, max_pts + 1)
    return array("d", [rng.random() for _ in range(2 * n)])


def test_polyline_distance_pure_native_agree():
    rng = random.Random(13)
    for _ in range(500):
        a = _random_polyline(rng)
        b = _random_polyline(rng)
        dp = pure.polyline_min_distance(a, b)
        dn = native.polyline_min_distance(a, b)
        assert dp == dn


def test_polyline_distance_against_shapely():
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import LineString, Point

    def geom(flat):
        pts = [(flat[2 * i], flat[2 * i + 1]) for i in range(len(flat) // 2)]
        return Point(pts[0]) if len(pts) == 1 else LineString(pts)

    rng = random.Random(14)
    for _ in range(500):
        a = _random_polyline(rng)
        b = _random_polyline(rng)
        want = geom(a).distance(geom(b))
        got = _kernels.polyline_min_distance(a, b)
        assert got == pytest.approx(want, abs=1e-12)


def _gradient_frame(w, h):
    return bytes(((x * 7 + y * 13 + c * 31) % 256) for y in range(h) for x in range(w) for c in range(3))


def test_equirect_render_pure_native_identical():
    src = _gradient_frame(96, 48)
    for pose in [(0, 0, 0), (0.7, 0.2, -0.4), (math.pi, -1.0, 3.0)]:
        out_p = pure.equirect_render(src, 96, 48, *pose, 75.0, 64, 36)
        out_n = native.equirect_render(src, 96, 48, *pose, 75.0, 64, 36)
        assert out_p == out_n


def test_equirect_render_matches_scalar_viewmath():
    w, h = 48, 24
    src = _gradient_frame(w, h)
    out_w, out_h = 17, 11
    pose = ViewPose(yaw=0.5, pitch=0.2, roll=-0.3)
    out = _kernels.equirect_render(src, w, h, pose.yaw, pose.pitch, pose.roll, 80.0, out_w, out_h)
    mismatches = 0
    for j in range(out_h):
        for i in range(out_w):
            px = 2.0 * (i + 0.5) / out_w - 1.0
            py = 1.0 - 2.0 * (j + 0.5) / out_h
            d = vm.viewport_ray(pose, 80.0, (px, py), aspect=out_w / out_h)
            u, v = vm.dir_to_uv(d)
            xi = int(u * w) % w
            yi = min(int(v * h), h - 1)
            want = src[(yi * w + xi) * 3 : (yi * w + xi) * 3 + 3]
            got = out[(j * out_w + i) * 3 : (j * out_w + i) * 3 + 3]
            if want != got:
                mismatches += 1
    # scalar path and kernel may round differently at pixel edges only
    assert mismatches <= out_w * out_h * 0.01


def test_equirect_render_rejects_bad_size():
    with pytest.raises(ValueError):
        _kernels.equirect_render(b"\x00" * 10, 4, 4, 0, 0, 0, 70, 2, 2)


def test_backend_reports():
    assert _kernels.BACKEND in ("pure", "native")
