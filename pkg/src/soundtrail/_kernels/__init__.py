"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy
implementations when it is unavailable. Set SOUNDTRAIL_KERNELS=python to
force the fallback (used by the benchmark and the equivalence tests).
"""

import os

from . import _kernels_py

resample_table = _kernels_py.resample_table

if os.environ.get("SOUNDTRAIL_KERNELS", "").lower() == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


import numpy as _np


def _c64(x):
    return _np.ascontiguousarray(x, dtype=_np.float64)


def resample_sinc(x, src_rate, dst_rate, table):
    return _impl.resample_sinc(_c64(x), src_rate, dst_rate, _c64(table))


def lag_costs(a, b, max_lag, min_overlap):
    return _impl.lag_costs(_c64(a), _c64(b), int(max_lag), int(min_overlap))
