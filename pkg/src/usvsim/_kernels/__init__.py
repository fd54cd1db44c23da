"""Numeric kernel backend selection.

The hot per-tick and per-pixel kernels exist twice: a compiled Cython
extension (``_core``) and a pure-Python/numpy fallback (``pure``) with
identical signatures and the same operation order. The compiled backend
is picked automatically when built; set ``USVSIM_KERNELS=pure`` or
``USVSIM_KERNELS=c`` to force a choice (``c`` raises if the extension
is missing rather than silently falling back).
"""

import os

from . import pure

_choice = os.environ.get("USVSIM_KERNELS", "").strip().lower()

compiled = None
if _choice not in ("pure", "py", "python"):
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None

if _choice in ("c", "compiled", "ext") and compiled is None:
    raise ImportError(
        "USVSIM_KERNELS=%s requested but the compiled kernels are not built" % _choice
    )

active = compiled if compiled is not None else pure


def backend_name() -> str:
    """Name of the kernel backend in use: 'compiled' or 'pure'."""
    return "pure" if active is pure else "compiled"
