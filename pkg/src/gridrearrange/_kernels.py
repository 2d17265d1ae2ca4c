"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``GRIDREARRANGE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
perm_bfs = _pykernels.perm_bfs
plan_conflicts = _pykernels.plan_conflicts

if not os.environ.get("GRIDREARRANGE_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None
    if _ckernels is not None:
        BACKEND = "cython"
        perm_bfs = _ckernels.perm_bfs
        plan_conflicts = _ckernels.plan_conflicts

__all__ = ["BACKEND", "perm_bfs", "plan_conflicts"]
