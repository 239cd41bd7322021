"""Selects the scan backend: compiled extension if built, numpy otherwise.

Set ``TRIVOXEL_PURE_PYTHON=1`` to force the numpy fallback (used by the
backend-comparison benchmark and tests).
"""

import os

from trivoxel.ssm import _scan_np

if os.environ.get("TRIVOXEL_PURE_PYTHON"):
    _impl = _scan_np
    BACKEND = "numpy"
else:
    try:
        from trivoxel import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _scan_np
        BACKEND = "numpy"


def scan_dense(a_bar, b_bar, c, d, x):
    return _impl.scan_dense(a_bar, b_bar, c, d, x)


def selective_scan(da, dbx, cseq, x, d_res):
    return _impl.selective_scan(da, dbx, cseq, x, d_res)
