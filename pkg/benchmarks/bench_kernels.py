#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Run from the repo root:  python3 benchmarks/bench_kernels.py
"""

import math
import random
import time
from array import array

from svrs._kernels import pure

try:
    from svrs._kernels import _native as native
except ImportError:
    native = None


def timeit(fn, *args, repeat=5, number=1):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def row(name, quantity, pure_s, native_s):
    speedup = "" if native_s is None else f"{pure_s / native_s:8.1f}x"
    native_txt = "      (not built)" if native_s is None else f"{native_s * 1e3:10.3f} ms"
    print(f"{name:<28} {quantity:<14} {pure_s * 1e3:10.3f} ms {native_txt} {speedup}")


def main():
    rng = random.Random(42)
    print(f"{'kernel':<28} {'workload':<14} {'pure':>13} {'native':>13} {'speedup':>9}")

    # recording checksum: 8 MiB, the max payload size
    data = rng.randbytes(8 * 1024 * 1024)
    p = timeit(lambda: pure.crc64_update(pure.CRC64_INIT, data))
    n = None if native is None else timeit(lambda: native.crc64_update(native.CRC64_INIT, data))
    row("crc64_update", "8 MiB", p, n)

    # eraser hit test: a 64-point stroke against a 16-point path, x100
    # (disjoint halves of the canvas, so no intersection early-exit)
    a = array("d", [rng.uniform(0.0, 0.45) for _ in range(128)])
    b = array("d", [rng.uniform(0.55, 1.0) for _ in range(32)])

    def many(fn):
        for _ in range(100):
            fn(a, b)

    p = timeit(lambda: many(pure.polyline_min_distance))
    n = None if native is None else timeit(lambda: many(native.polyline_min_distance))
    row("polyline_min_distance", "64x16 pts x100", p, n)

    # guide-view render: 512x256 equirect source into a 320x180 view
    src = rng.randbytes(512 * 256 * 3)
    args = (src, 512, 256, 0.4, 0.1, -0.2, 90.0, 320, 180)
    p = timeit(lambda: pure.equirect_render(*args))
    n = None if native is None else timeit(lambda: native.equirect_render(*args))
    row("equirect_render", "512x256->320p", p, n)


if __name__ == "__main__":
    main()
