"""Numerical kernels with a compiled backend and a pure-Python fallback.

The Cython extension is used when it was built; otherwise, or when the
environment variable ``CUBESAT_BATTERY_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy/Python versions are used.  ``BACKEND``
names the active choice.
"""
import os

from . import _pykernels

_force_pure = os.environ.get("CUBESAT_BATTERY_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

cumulative_dod = _impl.cumulative_dod
poly_columns = _impl.poly_columns
lasso_cd_gram = _impl.lasso_cd_gram

__all__ = ["BACKEND", "cumulative_dod", "poly_columns", "lasso_cd_gram"]
