"""Kernel backend selection.

The compiled extension is used when importable; set ``SKINNY_QR_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pycore

if os.environ.get("SKINNY_QR_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pycore
else:
    try:
        from . import _core as kernels
    except ImportError:
        kernels = _pycore

BACKEND = "python" if kernels is _pycore else "compiled"


def available() -> dict:
    """Every importable backend by name."""
    out = {"python": _pycore}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out


class use_backend:
    """Temporarily switch kernels: ``with use_backend("python"): ...``."""

    def __init__(self, name: str):
        backends = available()
        if name not in backends:
            raise ValueError(f"backend {name!r} not available (have {sorted(backends)})")
        self._mod = backends[name]

    def __enter__(self):
        global kernels, BACKEND
        self._saved = kernels, BACKEND
        kernels = self._mod
        BACKEND = "python" if self._mod is _pycore else "compiled"
        return self

    def __exit__(self, *exc):
        global kernels, BACKEND
        kernels, BACKEND = self._saved
