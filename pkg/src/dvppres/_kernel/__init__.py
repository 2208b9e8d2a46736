"""Envelope kernel with backend selection at import time.

The compiled Cython extension is preferred; the NumPy implementation of the
identical algorithm is the fallback.  Set DVPPRES_KERNEL=numpy or =cython
to force a backend (forcing cython raises if the extension is missing).
"""
from __future__ import annotations

import os

from . import envelope_np
from .batch import ScenarioBatch, build_batch

_requested = os.environ.get("DVPPRES_KERNEL", "auto").lower()

_cy = None
if _requested in ("auto", "cython"):
    try:
        from . import _envelope_cy as _cy
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "DVPPRES_KERNEL=cython but the compiled extension is not available")
        _cy = None

_impl = _cy if _cy is not None else envelope_np
backend_name = _impl.BACKEND_NAME

point_metrics = _impl.point_metrics
scan_rows = _impl.scan_rows


def available_backends():
    out = {"numpy": envelope_np}
    try:
        from . import _envelope_cy
        out["cython"] = _envelope_cy
    except ImportError:
        pass
    return out


__all__ = ["ScenarioBatch", "build_batch", "point_metrics", "scan_rows",
           "backend_name", "available_backends"]
