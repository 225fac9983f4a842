"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``WRISTARC_PURE_PYTHON`` is set to a non-empty value,
the pure-Python implementations are used.
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("WRISTARC_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND_NAME = "cython" if backend is compiled_backend else "python"

dcd_epoch = backend.dcd_epoch
fuse_quaternions = backend.fuse_quaternions


def available_backends() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
