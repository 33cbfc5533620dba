"""Kernel backend selection.

The compiled extension is used when it imports; ``PINPAT_PURE=1`` forces the
pure-Python kernels (the test-suite runs both).
"""

from __future__ import annotations

import os

from pinpat import _pykernels

_forced_pure = os.environ.get("PINPAT_PURE", "") not in ("", "0")

try:
    if _forced_pure:
        raise ImportError("pure-Python kernels forced by PINPAT_PURE")
    from pinpat import _ckernels as kernels
    BACKEND = "compiled"
except ImportError:
    kernels = _pykernels
    BACKEND = "python"

pure = _pykernels


def get_kernels(name: str | None = None):
    """Return the kernel module for ``"compiled"``, ``"python"`` or the active default."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        from pinpat import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
