"""Kernel backend selection.

The compiled extension is used when it was built; setting
``OPTAGG_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

if os.environ.get("OPTAGG_PURE_PYTHON", "") not in ("", "0"):
    from ._kernels_py import eye_histogram, nearest_points, phase_search_mse

    BACKEND = "python"
else:
    try:
        from ._ckernels import eye_histogram, nearest_points, phase_search_mse

        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import eye_histogram, nearest_points, phase_search_mse

        BACKEND = "python"

__all__ = ["BACKEND", "eye_histogram", "nearest_points", "phase_search_mse"]
