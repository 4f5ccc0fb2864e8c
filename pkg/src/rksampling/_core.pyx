# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_core_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs

cnp.import_array()


def assign_levels_sorted(values, thresholds):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t m = v.shape[0], L = t.shape[0], i, lo, hi, mid
    out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef double x
    for i in range(m):
        x = v[i]
        # first index with t[idx] > x
        lo = 0
        hi = L
        while lo < hi:
            mid = (lo + hi) >> 1
            if t[mid] <= x:
                lo = mid + 1
            else:
                hi = mid
        o[i] = lo - 1
    return out


def assign_levels_multi(approx, thresholds):
    cdef const double[:, ::1] a = np.ascontiguousarray(approx, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t nlev = a.shape[0], m = a.shape[1], i, k
    out = np.full(m, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    for i in range(m):
        k = nlev - 1
        while k >= 0:
            if a[k, i] >= t[k]:
                o[i] = k
                break
            k -= 1
    return out


def interp_linear_1d(values, double first, double step, x):
    cdef const double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = v.shape[0], m = xs.shape[0], i, j
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double s, fr, last = first + step * (n - 1)
    for i in range(m):
        if xs[i] <= first or n == 1:
            o[i] = v[0]
        elif xs[i] >= last:
            o[i] = v[n - 1]
        else:
            s = (xs[i] - first) / step
            j = <Py_ssize_t>floor(s)
            if j > n - 2:
                j = n - 2
            fr = s - j
            o[i] = v[j] + fr * (v[j + 1] - v[j])
    return out.reshape(np.shape(x))


def window_max_absdiff(K, Py_ssize_t w):
    cdef const double[:, ::1] k = np.ascontiguousarray(K, dtype=np.float64)
    cdef Py_ssize_t nx = k.shape[0], ny = k.shape[1], i, j, s, s0, s1
    out = np.zeros((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double best, d, c
    if w <= 0:
        return out
    for i in range(nx):
        s0 = i - w if i >= w else 0
        s1 = i + w if i + w < nx else nx - 1
        for j in range(ny):
            c = k[i, j]
            best = 0.0
            for s in range(s0, s1 + 1):
                d = fabs(k[s, j] - c)
                if d > best:
                    best = d
            o[i, j] = best
    return out
