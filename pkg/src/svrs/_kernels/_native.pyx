# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; must stay bit-identical to svrs._kernels.pure."""

from libc.math cimport sqrt, atan2, asin, tan, cos, sin, fabs

cdef double M_PI = 3.141592653589793238462643383279502884
cdef double M_TAU = 6.283185307179586476925286766559005768

cdef unsigned long long CRC64_POLY_C = 0xC96C5795D7870F42ULL

cdef unsigned long long[8][256] _TBL

cdef void _fill_tables() noexcept:
    cdef unsigned long long c
    cdef int i, k, b
    for i in range(256):
        c = <unsigned long long> i
        for b in range(8):
            if c & 1ULL:
                c = (c >> 1) ^ CRC64_POLY_C
            else:
                c = c >> 1
        _TBL[0][i] = c
    for k in range(1, 8):
        for i in range(256):
            _TBL[k][i] = (_TBL[k - 1][i] >> 8) ^ _TBL[0][_TBL[k - 1][i] & 0xFFULL]

_fill_tables()

CRC64_POLY = 0xC96C5795D7870F42
CRC64_INIT = 0xFFFFFFFFFFFFFFFF
CRC64_XOROUT = 0xFFFFFFFFFFFFFFFF


def crc64_update(state, data):
    """Fold ``data`` into a running reflected CRC-64/XZ state."""
    cdef unsigned long long s = <unsigned long long> state
    cdef const unsigned char[::1] buf = data
    cdef Py_ssize_t n = buf.shape[0]
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t end8 = n - (n % 8)
    cdef unsigned long long x
    while i < end8:
        x = (s
             ^ (<unsigned long long> buf[i])
             ^ ((<unsigned long long> buf[i + 1]) << 8)
             ^ ((<unsigned long long> buf[i + 2]) << 16)
             ^ ((<unsigned long long> buf[i + 3]) << 24)
             ^ ((<unsigned long long> buf[i + 4]) << 32)
             ^ ((<unsigned long long> buf[i + 5]) << 40)
             ^ ((<unsigned long long> buf[i + 6]) << 48)
             ^ ((<unsigned long long> buf[i + 7]) << 56))
        s = (_TBL[7][x & 0xFFULL]
             ^ _TBL[6][(x >> 8) & 0xFFULL]
             ^ _TBL[5][(x >> 16) & 0xFFULL]
             ^ _TBL[4][(x >> 24) & 0xFFULL]
             ^ _TBL[3][(x >> 32) & 0xFFULL]
             ^ _TBL[2][(x >> 40) & 0xFFULL]
             ^ _TBL[1][(x >> 48) & 0xFFULL]
             ^ _TBL[0][(x >> 56) & 0xFFULL])
        i += 8
    while i < n:
        s = _TBL[0][(s ^ buf[i]) & 0xFFULL] ^ (s >> 8)
        i += 1
    return s


cdef inline double _pt_seg_dist(double px, double py, double ax, double ay,
                                double bx, double by) noexcept:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double l2 = dx * dx + dy * dy
    cdef double t, ex, ey
    if l2 == 0.0:
        ex = px - ax
        ey = py - ay
        return sqrt(ex * ex + ey * ey)
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    return sqrt(ex * ex + ey * ey)


cdef inline double _orient(double ax, double ay, double bx, double by,
                           double cx, double cy) noexcept:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


cdef inline bint _segs_intersect(double ax, double ay, double bx, double by,
                                 double cx, double cy, double dx, double dy) noexcept:
    cdef double d1 = _orient(cx, cy, dx, dy, ax, ay)
    cdef double d2 = _orient(cx, cy, dx, dy, bx, by)
    cdef double d3 = _orient(ax, ay, bx, by, cx, cy)
    cdef double d4 = _orient(ax, ay, bx, by, dx, dy)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) \
        and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def polyline_min_distance(a, b):
    """Minimum distance between two flat [x0,y0,x1,y1,...] polylines."""
    cdef const double[::1] av = a
    cdef const double[::1] bv = b
    cdef Py_ssize_t na = av.shape[0] // 2
    cdef Py_ssize_t nb = bv.shape[0] // 2
    if na == 0 or nb == 0:
        raise ValueError("polylines need at least one point")
    cdef double best = 1e308
    cdef Py_ssize_t i, j, j2, k2
    cdef Py_ssize_t ia = na - 1 if na > 1 else 1
    cdef Py_ssize_t jb = nb - 1 if nb > 1 else 1
    cdef double ax, ay, bx, by, cx, cy, dx, dy, d
    for i in range(ia):
        ax = av[2 * i]
        ay = av[2 * i + 1]
        j2 = 2 * i + 2
        if j2 > 2 * (na - 1):
            j2 = 2 * (na - 1)
        bx = av[j2]
        by = av[j2 + 1]
        for j in range(jb):
            cx = bv[2 * j]
            cy = bv[2 * j + 1]
            k2 = 2 * j + 2
            if k2 > 2 * (nb - 1):
                k2 = 2 * (nb - 1)
            dx = bv[k2]
            dy = bv[k2 + 1]
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


def equirect_render(src, int src_w, int src_h, double yaw, double pitch,
                    double roll, double fov_deg, int out_w, int out_h):
    """Nearest-neighbor perspective view of an equirectangular RGB frame."""
    cdef const unsigned char[::1] s = src
    if s.shape[0] != src_w * src_h * 3:
        raise ValueError("src length does not match dimensions")
    cdef double cy_ = cos(-yaw)
    cdef double sy_ = sin(-yaw)
    cdef double cp = cos(pitch)
    cdef double sp = sin(pitch)
    cdef double cr = cos(roll)
    cdef double sr = sin(roll)
    cdef double r00 = cy_ * cr + sy_ * sp * sr
    cdef double r01 = -cy_ * sr + sy_ * sp * cr
    cdef double r02 = sy_ * cp
    cdef double r10 = cp * sr
    cdef double r11 = cp * cr
    cdef double r12 = -sp
    cdef double r20 = -sy_ * cr + cy_ * sp * sr
    cdef double r21 = sy_ * sr + cy_ * sp * cr
    cdef double r22 = cy_ * cp
    cdef double tanf = tan(fov_deg * M_PI / 180.0 / 2.0)
    cdef double aspect = (<double> out_w) / (<double> out_h)
    out_b = bytearray(out_w * out_h * 3)
    cdef unsigned char[::1] o = out_b
    cdef double inv_tau = 1.0 / M_TAU
    cdef double inv_pi = 1.0 / M_PI
    cdef int i, j, xi, yi
    cdef Py_ssize_t sidx, didx
    cdef double px, py, x, y, z, inv, u, v
    for j in range(out_h):
        py = (1.0 - 2.0 * (j + 0.5) / out_h) * tanf
        for i in range(out_w):
            px = (2.0 * (i + 0.5) / out_w - 1.0) * tanf * aspect
            x = r00 * px + r01 * py - r02
            y = r10 * px + r11 * py - r12
            z = r20 * px + r21 * py - r22
            inv = 1.0 / sqrt(x * x + y * y + z * z)
            x *= inv
            y *= inv
            z *= inv
            if y >= 1.0 - 1e-12 or y <= -1.0 + 1e-12:
                u = 0.5
            else:
                u = atan2(x, -z) * inv_tau + 0.5
            if y > 1.0:
                y = 1.0
            elif y < -1.0:
                y = -1.0
            v = 0.5 - asin(y) * inv_pi
            xi = (<int> (u * src_w)) % src_w
            yi = <int> (v * src_h)
            if yi >= src_h:
                yi = src_h - 1
            sidx = (yi * src_w + xi) * 3
            didx = (j * out_w + i) * 3
            o[didx] = s[sidx]
            o[didx + 1] = s[sidx + 1]
            o[didx + 2] = s[sidx + 2]
    return bytes(out_b)
