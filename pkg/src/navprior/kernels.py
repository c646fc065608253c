"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback. Set NAVPRIOR_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the parity tests).
"""

from __future__ import annotations

import os

_force_pure = os.environ.get("NAVPRIOR_PURE_PYTHON", "").lower() in {"1", "true", "yes"}

if _force_pure:
    from navprior import _kernels_py as _impl
else:
    try:
        from navprior import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from navprior import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
dijkstra = _impl.dijkstra
self_avoiding_walk = _impl.self_avoiding_walk
