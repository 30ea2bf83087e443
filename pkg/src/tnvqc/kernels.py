"""Backend selection for the MPS sweep kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is imported.  Setting ``TNVQC_PURE_PYTHON=1`` forces the
fallback.
"""

from __future__ import annotations

import os

from . import _sweep_py

if os.environ.get("TNVQC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _sweep_py
    BACKEND = "python"
else:
    try:
        from . import _sweep_ext as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _sweep_py
        BACKEND = "python"

forward = _impl.forward
backward = _impl.backward

__all__ = ["BACKEND", "forward", "backward"]
