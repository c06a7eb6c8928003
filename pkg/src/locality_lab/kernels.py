"""Kernel dispatch: compiled extension if importable, numpy fallback otherwise.

Set ``LOCALITY_LAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("LOCALITY_LAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

embed_coo = _impl.embed_coo
fourier_sums = _impl.fourier_sums
