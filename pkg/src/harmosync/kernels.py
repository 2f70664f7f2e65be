"""Kernel backend selection.

The compiled extension is used when it was built; set
``HARMOSYNC_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _pykernels

if os.environ.get("HARMOSYNC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
propagate = _impl.propagate


def available_backends():
    """Mapping of backend name to ``propagate`` for every importable implementation."""
    out = {"python": _pykernels.propagate}
    try:
        from . import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels.propagate
    return out
