"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; setting
``TAMATRACK_PURE=1`` forces the pure-Python fallback.
"""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if not os.environ.get("TAMATRACK_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        kernels = _compiled
        BACKEND = "cython"


def available():
    """Backends importable in this environment, compiled first."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get(name):
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
