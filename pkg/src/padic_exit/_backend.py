"""Picks the compiled kernels when available; ``PADIC_EXIT_BACKEND=python`` forces numpy."""
import os

from . import _kernels_py

RADIUS_ZERO = _kernels_py.RADIUS_ZERO
RADIUS_OVER = _kernels_py.RADIUS_OVER

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("PADIC_EXIT_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Kernel module by name (``"cython"``/``"python"``); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
