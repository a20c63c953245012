"""Stepper backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available.  Set DELAYSL_BACKEND=pure (or compiled) to
force one, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _core as compiled
except ImportError:
    compiled = None


def get_backend(name: str | None = None):
    """Return the module providing ``rk4_run``.

    name: None/"auto" picks compiled when present, else the fallback;
    "compiled" and "pure" force a specific one.
    """
    if name is None:
        name = os.environ.get("DELAYSL_BACKEND", "auto")
    if name in ("auto", ""):
        return compiled if compiled is not None else pure
    if name == "compiled":
        if compiled is None:
            raise ImportError("compiled stepper extension is not available")
        return compiled
    if name == "pure":
        return pure
    raise ValueError(f"unknown backend {name!r}")


ACTIVE = get_backend()
