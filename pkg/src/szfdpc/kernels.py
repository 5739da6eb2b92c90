"""Kernel dispatch: compiled extension when available, else pure Python."""
import os

from . import _kernels_py

BACKEND = "python"
water_level = _kernels_py.water_level
simplex_gamma = _kernels_py.simplex_gamma

if os.environ.get("SZFDPC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        water_level = _kernels.water_level
        simplex_gamma = _kernels.simplex_gamma
        BACKEND = "cython"
