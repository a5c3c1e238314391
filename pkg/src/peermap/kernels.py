"""Kernel backend selection.

The compiled extension is used when importable; otherwise the pure-Python
fallback takes over with identical results (the two are kept bit-compatible).
Set PEERMAP_PURE=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("PEERMAP_PURE") == "1":
    _impl = _pure
    COMPILED = False
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        _impl = _pure
        COMPILED = False

sim_rounds = _impl.sim_rounds
brandes_block = _impl.brandes_block


def backend() -> str:
    return "native" if COMPILED else "pure"
