"""Select the compiled hex kernels when available, else the pure-Python ones.

Set ``ECSFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _hexcore_py

BACKEND = "python"
dilate_step = _hexcore_py.dilate_step
count_both = _hexcore_py.count_both

if not os.environ.get("ECSFLOW_PURE_PYTHON"):
    try:
        from . import _hexcore
    except ImportError:  # pragma: no cover - depends on build
        pass
    else:
        BACKEND = "cython"
        dilate_step = _hexcore.dilate_step
        count_both = _hexcore.count_both
