# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coalescent hot loops. Mirrors ``_pykernels`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()


def build_genealogies(int n, beta, expo, pick):
    cdef const double[::1] b = np.ascontiguousarray(beta, dtype=np.float64)
    cdef const double[:, ::1] e = np.ascontiguousarray(expo, dtype=np.float64)
    cdef const double[:, :, ::1] u = np.ascontiguousarray(pick, dtype=np.float64)
    cdef Py_ssize_t reps = b.shape[0]
    cdef Py_ssize_t nodes = 2 * n - 1
    parent_arr = np.full((reps, nodes), -1, dtype=np.int64)
    time_arr = np.zeros((reps, nodes), dtype=np.float64)
    leaves_arr = np.zeros((reps, nodes), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] parent = parent_arr
    cdef double[:, ::1] time = time_arr
    cdef cnp.int64_t[:, ::1] leaves = leaves_arr
    active_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] active = active_arr
    cdef Py_ssize_t r, j, k, i, m, lo, hi, node, a, c
    cdef double t, pairs, br

    for r in range(reps):
        br = b[r]
        for i in range(n):
            active[i] = i
            leaves[r, i] = 1
        t = 0.0
        for j in range(n - 1):
            k = n - j
            pairs = k * (k - 1) / 2.0
            if br > 0:
                t = t + log1p(br * e[r, j] * exp(-br * t) / pairs) / br
            else:
                t = t + e[r, j] / pairs
            i = <Py_ssize_t>(u[r, j, 0] * k)
            if i > k - 1:
                i = k - 1
            m = <Py_ssize_t>(u[r, j, 1] * (k - 1))
            if m > k - 2:
                m = k - 2
            if m >= i:
                m += 1
            a = active[i]
            c = active[m]
            node = n + j
            parent[r, a] = node
            parent[r, c] = node
            time[r, node] = t
            leaves[r, node] = leaves[r, a] + leaves[r, c]
            lo = i if i < m else m
            hi = m if i < m else i
            active[lo] = node
            active[hi] = active[k - 1]
    return parent_arr, time_arr, leaves_arr


def site_frequency_spectra(int n, parent, time, leaves, n_mut, pos, chunk=None):
    cdef const cnp.int64_t[:, ::1] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef const double[:, ::1] tm = np.ascontiguousarray(time, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] lv = np.ascontiguousarray(leaves, dtype=np.int64)
    cdef const cnp.int64_t[::1] nm = np.ascontiguousarray(n_mut, dtype=np.int64)
    cdef const double[::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef Py_ssize_t reps = par.shape[0]
    cdef Py_ssize_t nb = 2 * n - 2
    sfs_arr = np.zeros((reps, n - 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] sfs = sfs_arr
    cum_arr = np.empty(nb, dtype=np.float64)
    cdef double[::1] cum = cum_arr
    cdef Py_ssize_t r, v, q, lo, hi, mid, offset = 0
    cdef double acc, target

    for r in range(reps):
        acc = 0.0
        for v in range(nb):
            acc = acc + (tm[r, par[r, v]] - tm[r, v])
            cum[v] = acc
        for q in range(offset, offset + nm[r]):
            target = p[q] * cum[nb - 1]
            # number of cum entries <= target (upper bound)
            lo = 0
            hi = nb
            while lo < hi:
                mid = (lo + hi) >> 1
                if cum[mid] <= target:
                    lo = mid + 1
                else:
                    hi = mid
            if lo > nb - 1:
                lo = nb - 1
            sfs[r, lv[r, lo] - 1] += 1
        offset += nm[r]
    return sfs_arr
