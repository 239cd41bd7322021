"""Pure-numpy scan kernels; fallback when the compiled extension is unavailable."""

import numpy as np


def scan_dense(a_bar, b_bar, c, d, x):
    """Fixed-parameter scan: h_k = A_bar h_{k-1} + B_bar x_k, y_k = C h_k + D x_k."""
    m = x.shape[0]
    n = b_bar.shape[0]
    y = np.empty(m)
    h = np.zeros(n)
    for k in range(m):
        h = a_bar @ h + b_bar * x[k]
        y[k] = c @ h + d * x[k]
    return y


def selective_scan(da, dbx, cseq, x, d_res):
    """Diagonal selective scan; see the compiled twin for the recurrence."""
    m, dd, _ = da.shape
    y = np.empty((m, dd))
    h = np.zeros_like(da[0])
    for k in range(m):
        h = da[k] * h + dbx[k]
        y[k] = h @ cseq[k] + d_res * x[k]
    return y
