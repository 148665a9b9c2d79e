# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled permutation-sum kernels for small dense matrices.

Naive triple-loop products beat BLAS dispatch below d ~ 32, which is where
the bracket dynamics lives; larger matrices are routed to the numpy path
by the selecting wrapper.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def antisym_chain_sum(const cnp.complex128_t[:, :, ::1] mats,
                      const cnp.int64_t[:, ::1] perms,
                      const cnp.int8_t[::1] signs):
    cdef Py_ssize_t n_perm = perms.shape[0]
    cdef Py_ssize_t k = perms.shape[1]
    cdef Py_ssize_t d = mats.shape[1]
    out_arr = np.zeros((d, d), dtype=np.complex128)
    buf_a = np.empty((d, d), dtype=np.complex128)
    buf_b = np.empty((d, d), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] out = out_arr
    cdef cnp.complex128_t[:, ::1] cur = buf_a
    cdef cnp.complex128_t[:, ::1] nxt = buf_b
    cdef cnp.complex128_t[:, ::1] swp
    cdef cnp.complex128_t acc
    cdef double sign
    cdef Py_ssize_t p, step, m, i, j, l

    for p in range(n_perm):
        m = perms[p, 0]
        for i in range(d):
            for j in range(d):
                cur[i, j] = mats[m, i, j]
        for step in range(1, k):
            m = perms[p, step]
            for i in range(d):
                for j in range(d):
                    acc = 0
                    for l in range(d):
                        acc = acc + cur[i, l] * mats[m, l, j]
                    nxt[i, j] = acc
            swp = cur
            cur = nxt
            nxt = swp
        sign = signs[p]
        for i in range(d):
            for j in range(d):
                out[i, j] = out[i, j] + sign * cur[i, j]
    return out_arr


def signed_trace_sum(const cnp.complex128_t[:, :, ::1] mats,
                     const cnp.int64_t[:, ::1] perms,
                     const cnp.int8_t[::1] signs):
    cdef Py_ssize_t n_perm = perms.shape[0]
    cdef Py_ssize_t k = perms.shape[1]
    cdef Py_ssize_t d = mats.shape[1]
    buf_a = np.empty((d, d), dtype=np.complex128)
    buf_b = np.empty((d, d), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] cur = buf_a
    cdef cnp.complex128_t[:, ::1] nxt = buf_b
    cdef cnp.complex128_t[:, ::1] swp
    cdef cnp.complex128_t acc, total, tr
    cdef double sign
    cdef Py_ssize_t p, step, m, i, j, l

    total = 0
    for p in range(n_perm):
        m = perms[p, 0]
        for i in range(d):
            for j in range(d):
                cur[i, j] = mats[m, i, j]
        for step in range(1, k):
            m = perms[p, step]
            for i in range(d):
                for j in range(d):
                    acc = 0
                    for l in range(d):
                        acc = acc + cur[i, l] * mats[m, l, j]
                    nxt[i, j] = acc
            swp = cur
            cur = nxt
            nxt = swp
        tr = 0
        for i in range(d):
            tr = tr + cur[i, i]
        sign = signs[p]
        total = total + sign * tr
    return complex(total)
