# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: windowed-sinc resampling and the sync lag scan.

Mirrors _kernels_py exactly (same tables, same arithmetic); kept in plain C
loops so threads can run them with the GIL released.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor

cnp.import_array()


def resample_sinc(cnp.float64_t[::1] x, double src_rate, double dst_rate,
                  cnp.float64_t[:, ::1] table):
    cdef Py_ssize_t n_in = x.shape[0]
    cdef Py_ssize_t n_out = <Py_ssize_t>(n_in * dst_rate / src_rate + 0.5)
    out_arr = np.empty(n_out, dtype=np.float64)
    if n_out == 0:
        return out_arr
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t taps = table.shape[1]
    cdef Py_ssize_t half = taps // 2
    cdef Py_ssize_t phases = table.shape[0] - 1
    cdef double ratio = src_rate / dst_rate

    pad_arr = np.concatenate([np.zeros(half), np.asarray(x), np.zeros(taps)])
    cdef cnp.float64_t[::1] padded = pad_arr
    cdef Py_ssize_t i, j, n0, p0, base
    cdef double t, frac, fp, w, c, acc, csum

    with nogil:
        for i in range(n_out):
            t = i * ratio
            n0 = <Py_ssize_t>floor(t)
            frac = t - n0
            fp = frac * phases
            p0 = <Py_ssize_t>fp
            w = fp - p0
            base = n0 - (half - 1) + half
            acc = 0.0
            csum = 0.0
            for j in range(taps):
                c = table[p0, j] * (1.0 - w) + table[p0 + 1, j] * w
                acc += padded[base + j] * c
                csum += c
            out[i] = acc / csum
    return out_arr


def lag_costs(cnp.float64_t[::1] a, cnp.float64_t[::1] b, int max_lag,
              int min_overlap):
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    out_arr = np.full(2 * max_lag + 1, np.nan, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t k, t0, t1, t
    cdef int lag
    cdef double acc

    with nogil:
        for k in range(2 * max_lag + 1):
            lag = k - max_lag
            t0 = lag if lag > 0 else 0
            t1 = na if na < nb + lag else nb + lag
            if t1 - t0 < min_overlap:
                continue
            acc = 0.0
            for t in range(t0, t1):
                acc += fabs(a[t] - b[t - lag])
            out[k] = acc / (t1 - t0)
    return out_arr
