# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernels.

Same contracts as ``trivoxel.ssm._scan_np``; selected at import time by
``trivoxel.ssm.backend``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_dense(double[:, ::1] a_bar, double[::1] b_bar, double[::1] c,
               double d, double[::1] x):
    """Fixed-parameter scan: h_k = A_bar h_{k-1} + B_bar x_k, y_k = C h_k + D x_k."""
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t n = b_bar.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hn = np.empty(n, dtype=np.float64)
    cdef double[::1] hv = h
    cdef double[::1] hnv = hn
    cdef double[::1] yv = y
    cdef Py_ssize_t k, i, j
    cdef double acc, out
    for k in range(m):
        for i in range(n):
            acc = b_bar[i] * x[k]
            for j in range(n):
                acc += a_bar[i, j] * hv[j]
            hnv[i] = acc
        out = d * x[k]
        for i in range(n):
            hv[i] = hnv[i]
            out += c[i] * hv[i]
        yv[k] = out
    return y


def selective_scan(double[:, :, ::1] da, double[:, :, ::1] dbx,
                   double[:, ::1] cseq, double[:, ::1] x,
                   double[::1] d_res):
    """Diagonal selective scan over (M, D, N) per-step transition/input tensors.

    h[d] <- da[k,d,:] * h[d] + dbx[k,d,:];  y[k,d] = sum_n h[d,n] cseq[k,n] + d_res[d] x[k,d]
    """
    cdef Py_ssize_t m = da.shape[0]
    cdef Py_ssize_t dd = da.shape[1]
    cdef Py_ssize_t n = da.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] y = np.empty((m, dd), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] h = np.zeros((dd, n), dtype=np.float64)
    cdef double[:, ::1] hv = h
    cdef double[:, ::1] yv = y
    cdef Py_ssize_t k, di, j
    cdef double acc
    for k in range(m):
        for di in range(dd):
            acc = 0.0
            for j in range(n):
                hv[di, j] = da[k, di, j] * hv[di, j] + dbx[k, di, j]
                acc += hv[di, j] * cseq[k, j]
            yv[k, di] = acc + d_res[di] * x[k, di]
    return y
