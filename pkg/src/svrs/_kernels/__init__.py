"""Hot-loop kernels with backend selection at import time.

Prefers the compiled Cython extension; falls back to the pure-Python
implementation when the extension is absent or ``SVRS_PURE=1`` is set.
``BACKEND`` names the choice; ``benchmarks/bench_kernels.py`` compares the
two.
"""

import os

from . import pure

if os.environ.get("SVRS_PURE") == "1":
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

CRC64_POLY = pure.CRC64_POLY
CRC64_INIT = pure.CRC64_INIT
CRC64_XOROUT = pure.CRC64_XOROUT

crc64_update = _impl.crc64_update
polyline_min_distance = _impl.polyline_min_distance
equirect_render = _impl.equirect_render


def crc64(data: bytes, state: int | None = None) -> int:
    """One-shot or chained CRC-64/XZ digest of ``data``.

    Pass the previous digest as ``state`` to extend it over another chunk.
    """
    s = CRC64_INIT if state is None else state ^ CRC64_XOROUT
    return crc64_update(s, data) ^ CRC64_XOROUT
