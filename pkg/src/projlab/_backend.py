"""Selects the eigen-kernel implementation at import time.

The compiled extension is used when it imports cleanly. Setting
``PROJLAB_BACKEND=python`` forces the pure-Python kernel (useful for
benchmarks and for checking that both paths agree).
"""
import os

from . import _eigkernel_py

_requested = os.environ.get("PROJLAB_BACKEND", "auto").lower()

if _requested == "python":
    eigh_kernel = _eigkernel_py.eigh_kernel
    BACKEND = "python"
else:
    try:
        from ._eigkernel import eigh_kernel
    except ImportError:
        if _requested == "compiled":
            raise
        eigh_kernel = _eigkernel_py.eigh_kernel
        BACKEND = "python"
    else:
        BACKEND = "compiled"

__all__ = ["eigh_kernel", "BACKEND"]
