"""Pick the compiled kernels when available, the NumPy fallback otherwise.

Set ``GFM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("GFM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

matvec5 = _impl.matvec5
cg5 = _impl.cg5
CONVERGED, MAX_ITER, BREAKDOWN = _kernels_py.CONVERGED, _kernels_py.MAX_ITER, _kernels_py.BREAKDOWN
