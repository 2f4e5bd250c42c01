"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``TORIC_UF_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("TORIC_UF_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _fallback

BACKEND = kernels.NAME


def get(name=None):
    """Kernel module by name (``"cython"``, ``"python"``) or the default."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
