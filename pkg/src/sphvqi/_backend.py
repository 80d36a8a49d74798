"""Select the compiled summation core when available.

Set ``SPHVQI_BACKEND=python`` to force the numpy implementation.
"""
from __future__ import annotations

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_forced = os.environ.get("SPHVQI_BACKEND", "").strip().lower()
if _forced not in ("", "python", "cython"):
    log.warning("ignoring unknown SPHVQI_BACKEND=%r", _forced)
    _forced = ""


def available() -> list[str]:
    names = ["python"]
    if _ckernels is not None:
        names.append("cython")
    return names


def default_name() -> str:
    if _forced == "python" or _ckernels is None:
        if _forced == "cython":
            log.warning("compiled core requested but not built; using numpy")
        return "python"
    return "cython"


BACKEND = default_name()


def get(name: str | None = None):
    """Module implementing ``kernel_sum`` for backend ``name``."""
    name = BACKEND if name is None else name
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled core sphvqi._ckernels is not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
