"""Kernel backend selection.

The compiled extension is used when it imports; setting ``GGN_LAB_PURE=1``
forces the pure-Python twin. Both produce bit-identical results.
"""
from __future__ import annotations

import os
from types import ModuleType

from ggn_lab.sim import _pykernel


def _load_compiled() -> ModuleType | None:
    if os.environ.get("GGN_LAB_PURE", "") not in ("", "0"):
        return None
    try:
        from ggn_lab.sim import _kernel
    except ImportError:
        return None
    return _kernel


_compiled = _load_compiled()


def get(name: str | None = None) -> ModuleType:
    """Return the kernel module: ``"compiled"``, ``"python"`` or the default."""
    if name == "python":
        return _pykernel
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled
    if name not in (None, "auto"):
        raise ValueError(f"unknown backend {name!r}")
    return _compiled if _compiled is not None else _pykernel


def available() -> list[str]:
    return (["compiled"] if _compiled is not None else []) + ["python"]


def default_name() -> str:
    return "compiled" if _compiled is not None else "python"
