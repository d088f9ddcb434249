"""Bitset kernels for applicability, transitions and breadth-first search.

The compiled extension is used when it imports; setting
``HCPLAN_PURE_PYTHON=1`` forces the pure-Python implementation.
"""

from __future__ import annotations

import os

from . import _pykernel
from .spec import FALSE, TRUE, ActionSpec, CondSpec, EffectSpec, KernelSpec, SearchResult, holds

_compiled = None
if os.environ.get("HCPLAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernel as _compiled
    except ImportError:
        _compiled = None

Kernel = _compiled.Kernel if _compiled is not None else _pykernel.Kernel
BACKEND = "cython" if _compiled is not None else "python"
PyKernel = _pykernel.Kernel


def available_backends() -> dict[str, type]:
    out = {"python": _pykernel.Kernel}
    if _compiled is not None:
        out["cython"] = _compiled.Kernel
    return out


__all__ = [
    "ActionSpec", "BACKEND", "CondSpec", "EffectSpec", "FALSE", "Kernel", "KernelSpec",
    "PyKernel", "SearchResult", "TRUE", "available_backends", "holds",
]
