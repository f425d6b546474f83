"""Backend selection for the hot kernels.

Prefers the compiled extension, falls back to the NumPy reference when the
extension is missing, and honours QKDSIM_PURE_PYTHON=1 to force the fallback
(useful for benchmarking and debugging). Both backends are bit-identical.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QKDSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

match_coincidences = _impl.match_coincidences
lag_histogram = _impl.lag_histogram

__all__ = ["BACKEND", "match_coincidences", "lag_histogram"]
