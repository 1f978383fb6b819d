# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernels; signatures and outputs match ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def first_mismatch(x, y, Py_ssize_t n, Py_ssize_t resolution):
    cdef const i64[::1] xv = np.ascontiguousarray(x, dtype=np.int64)
    cdef const i64[::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t length = n + resolution - 1
    if xv.shape[0] < length or yv.shape[0] < length:
        raise ValueError("windows shorter than n + resolution - 1")
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] ov = out
    cdef Py_ssize_t j
    cdef i64 nxt = length + resolution
    cdef i64 m
    with nogil:
        for j in range(length - 1, -1, -1):
            if xv[j] != yv[j]:
                nxt = j
            if j < n:
                m = nxt - j
                ov[j] = m if m < resolution else resolution
    return out


def block_codes(x, Py_ssize_t k, i64 base, Py_ssize_t n):
    cdef const i64[::1] xv = np.ascontiguousarray(x, dtype=np.int64)
    if xv.shape[0] < n + k - 1:
        raise ValueError("window shorter than n + k - 1")
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] ov = out
    cdef Py_ssize_t j, i
    cdef i64 c
    with nogil:
        for j in range(n):
            c = 0
            for i in range(k):
                c = c * base + xv[j + i]
            ov[j] = c
    return out


cdef inline Py_ssize_t _inv(const double[:] row, double u) noexcept nogil:
    cdef Py_ssize_t a = 0
    cdef Py_ssize_t last = row.shape[0] - 1
    while a < last and u >= row[a]:
        a += 1
    return a


def coupled_chain(cdf, acc, rcdf, int rule, u, state, iid=False):
    cdef const double[:, :, :] cv = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const double[:, :, :, :] av = np.ascontiguousarray(acc, dtype=np.float64)
    cdef const double[:, :, :, :] rv = np.ascontiguousarray(rcdf, dtype=np.float64)
    cdef const double[:, :] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef i64[:] sv = state
    cdef Py_ssize_t n_comp = cv.shape[0]
    cdef Py_ssize_t width = uv.shape[0]
    out = np.empty((n_comp, width), dtype=np.int64)
    cdef i64[:, ::1] ov = out
    cdef Py_ssize_t t, i, s0, si, a0, col
    with nogil:
        for t in range(width):
            if rule == 2:
                s0 = sv[0]
                a0 = _inv(cv[0, s0], uv[t, 0])
                ov[0, t] = a0
                for i in range(1, n_comp):
                    si = sv[i]
                    if uv[t, 2 * i] < av[i, s0, si, a0]:
                        ov[i, t] = a0
                    else:
                        ov[i, t] = _inv(rv[i, s0, si], uv[t, 2 * i + 1])
            else:
                for i in range(n_comp):
                    col = 0 if rule == 1 else 2 * i
                    ov[i, t] = _inv(cv[i, sv[i]], uv[t, col])
            for i in range(n_comp):
                sv[i] = ov[i, t]
    return out
