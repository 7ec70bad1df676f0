# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decision kernels; semantics match ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, floor

cnp.import_array()


def nearest_points(symbols, points):
    cdef const double complex[::1] s = np.ascontiguousarray(symbols, dtype=np.complex128)
    cdef const double complex[::1] p = np.ascontiguousarray(points, dtype=np.complex128)
    cdef Py_ssize_t n = s.shape[0], m = p.shape[0], i, j, best
    idx_a = np.empty(n, dtype=np.int64)
    err_a = np.empty(n, dtype=np.float64)
    cdef long long[::1] idx = idx_a
    cdef double[::1] err = err_a
    cdef double dr, di, d, dmin
    with nogil:
        for i in range(n):
            best = 0
            dr = s[i].real - p[0].real
            di = s[i].imag - p[0].imag
            dmin = dr * dr + di * di
            for j in range(1, m):
                dr = s[i].real - p[j].real
                di = s[i].imag - p[j].imag
                d = dr * dr + di * di
                if d < dmin:
                    dmin = d
                    best = j
            idx[i] = best
            err[i] = dmin
    return idx_a, err_a


def phase_search_mse(symbols, points, phases):
    cdef const double complex[::1] s = np.ascontiguousarray(symbols, dtype=np.complex128)
    cdef const double complex[::1] p = np.ascontiguousarray(points, dtype=np.complex128)
    cdef const double[::1] ph = np.ascontiguousarray(phases, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0], m = p.shape[0], k = ph.shape[0], i, j, q
    out_a = np.empty(k, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef double c, sn, xr, xi, dr, di, d, dmin, acc
    with nogil:
        for q in range(k):
            c = cos(ph[q])
            sn = sin(ph[q])
            acc = 0.0
            for i in range(n):
                xr = s[i].real * c - s[i].imag * sn
                xi = s[i].real * sn + s[i].imag * c
                dr = xr - p[0].real
                di = xi - p[0].imag
                dmin = dr * dr + di * di
                for j in range(1, m):
                    dr = xr - p[j].real
                    di = xi - p[j].imag
                    d = dr * dr + di * di
                    if d < dmin:
                        dmin = d
                acc += dmin
            out[q] = acc / n
    return out_a


def eye_histogram(values, time_index, Py_ssize_t n_time, double lo, double hi, Py_ssize_t n_amp):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const long long[::1] t = np.ascontiguousarray(time_index, dtype=np.int64)
    hist_a = np.zeros((n_time, n_amp), dtype=np.int64)
    cdef long long[:, ::1] hist = hist_a
    cdef Py_ssize_t n = v.shape[0], i, a
    cdef double scale = n_amp / (hi - lo)
    with nogil:
        for i in range(n):
            if v[i] == hi:
                a = n_amp - 1
            else:
                a = <Py_ssize_t> floor((v[i] - lo) * scale)
            if a >= 0 and a < n_amp:
                hist[t[i], a] += 1
    return hist_a
