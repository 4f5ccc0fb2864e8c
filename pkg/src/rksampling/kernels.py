"""Kernel dispatch: compiled Cython core when available, numpy fallback otherwise.

Set ``RKSAMPLING_PURE_PYTHON=1`` before import to force the fallback.
"""

import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if not os.environ.get("RKSAMPLING_PURE_PYTHON"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _core_py

assign_levels_sorted = _impl.assign_levels_sorted
assign_levels_multi = _impl.assign_levels_multi
interp_linear_1d = _impl.interp_linear_1d
window_max_absdiff = _impl.window_max_absdiff

__all__ = [
    "BACKEND",
    "assign_levels_sorted",
    "assign_levels_multi",
    "interp_linear_1d",
    "window_max_absdiff",
]
