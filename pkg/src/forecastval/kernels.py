"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. Setting ``FORECASTVAL_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("FORECASTVAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

cell_sums = _impl.cell_sums
cell_moments = _impl.cell_moments
cell_weighted_ss = _impl.cell_weighted_ss
gray_code_weights = _impl.gray_code_weights

__all__ = [
    "BACKEND",
    "cell_sums",
    "cell_moments",
    "cell_weighted_ss",
    "gray_code_weights",
]
