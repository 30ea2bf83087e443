# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched MPS sweep kernels.

Same contract and array layout as :mod:`tnvqc._sweep_py`.
"""

import numpy as np
from libc.math cimport sqrt, isfinite

cdef double ENV_MAX = 1e100
cdef double ENV_MIN = 1e-100


cdef inline int _check(double[::1] env, int chi) nogil:
    cdef double acc = 0.0
    cdef int a
    for a in range(chi):
        acc += env[a] * env[a]
    acc = sqrt(acc)
    if not isfinite(acc) or acc > ENV_MAX:
        return 1
    if acc > 0.0 and acc < ENV_MIN:
        return 2
    return 0


def forward(double[:, :, :, ::1] cores, double[:, :, :, ::1] out_core,
            double[:, :, ::1] phi, int k):
    cdef Py_ssize_t n_sites = cores.shape[0]
    cdef Py_ssize_t chi = cores.shape[1]
    cdef Py_ssize_t d = out_core.shape[3]
    cdef Py_ssize_t batch = phi.shape[0]
    left_arr = np.zeros((batch, k + 1, chi))
    right_arr = np.zeros((batch, n_sites - k, chi))
    out_arr = np.zeros((batch, d))
    cdef double[:, :, ::1] left = left_arr
    cdef double[:, :, ::1] right = right_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, i, a, c, o, j
    cdef double p0, p1, acc, la, m
    cdef int status = 0, st

    with nogil:
        for b in range(batch):
            left[b, 0, 0] = 1.0
            for i in range(k):
                p0 = phi[b, i, 0]
                p1 = phi[b, i, 1]
                for c in range(chi):
                    acc = 0.0
                    for a in range(chi):
                        la = left[b, i, a]
                        if la != 0.0:
                            acc = acc + la * (p0 * cores[i, a, 0, c] + p1 * cores[i, a, 1, c])
                    left[b, i + 1, c] = acc
                st = _check(left[b, i + 1], chi)
                if st > status:
                    status = st
            right[b, n_sites - k - 1, 0] = 1.0
            for i in range(n_sites - 1, k, -1):
                j = i - k
                p0 = phi[b, i, 0]
                p1 = phi[b, i, 1]
                for a in range(chi):
                    acc = 0.0
                    for c in range(chi):
                        acc = acc + (p0 * cores[i, a, 0, c] + p1 * cores[i, a, 1, c]) * right[b, j, c]
                    right[b, j - 1, a] = acc
                st = _check(right[b, j - 1], chi)
                if st > status:
                    status = st
            p0 = phi[b, k, 0]
            p1 = phi[b, k, 1]
            for a in range(chi):
                la = left[b, k, a]
                if la == 0.0:
                    continue
                for c in range(chi):
                    m = la * right[b, 0, c]
                    if m == 0.0:
                        continue
                    for o in range(d):
                        out[b, o] += m * (p0 * out_core[a, 0, c, o] + p1 * out_core[a, 1, c, o])
    return out_arr, left_arr, right_arr, int(n_sites - 1), status


def backward(double[:, :, :, ::1] cores, double[:, :, :, ::1] out_core,
             double[:, :, ::1] phi, int k,
             double[:, :, ::1] left, double[:, :, ::1] right,
             double[:, ::1] grad_out):
    cdef Py_ssize_t n_sites = cores.shape[0]
    cdef Py_ssize_t chi = cores.shape[1]
    cdef Py_ssize_t d = out_core.shape[3]
    cdef Py_ssize_t batch = phi.shape[0]
    gc_arr = np.zeros((n_sites, chi, 2, chi))
    go_arr = np.zeros((chi, 2, chi, d))
    gp_arr = np.zeros((batch, n_sites, 2))
    wk_arr = np.zeros((chi, 2, chi))
    mk_arr = np.zeros((chi, chi))
    v_arr = np.zeros(chi)
    t_arr = np.zeros(chi)
    cdef double[:, :, :, ::1] gc = gc_arr
    cdef double[:, :, :, ::1] go = go_arr
    cdef double[:, :, ::1] gp = gp_arr
    cdef double[:, :, ::1] wk = wk_arr
    cdef double[:, ::1] mk = mk_arr
    cdef double[::1] v = v_arr
    cdef double[::1] t = t_arr
    cdef Py_ssize_t b, i, a, c, o, s
    cdef double p0, p1, acc, la, rc, g0, g1, x0, x1

    with nogil:
        for b in range(batch):
            p0 = phi[b, k, 0]
            p1 = phi[b, k, 1]
            # output-site tensor weighted by the upstream gradient
            for a in range(chi):
                for s in range(2):
                    for c in range(chi):
                        acc = 0.0
                        for o in range(d):
                            acc = acc + grad_out[b, o] * out_core[a, s, c, o]
                        wk[a, s, c] = acc
            g0 = 0.0
            g1 = 0.0
            for a in range(chi):
                la = left[b, k, a]
                for c in range(chi):
                    rc = right[b, 0, c]
                    mk[a, c] = p0 * wk[a, 0, c] + p1 * wk[a, 1, c]
                    g0 = g0 + la * wk[a, 0, c] * rc
                    g1 = g1 + la * wk[a, 1, c] * rc
                    if la * rc != 0.0:
                        for o in range(d):
                            go[a, 0, c, o] += la * p0 * rc * grad_out[b, o]
                            go[a, 1, c, o] += la * p1 * rc * grad_out[b, o]
            gp[b, k, 0] = g0
            gp[b, k, 1] = g1

            # leftward sweep
            for a in range(chi):
                acc = 0.0
                for c in range(chi):
                    acc = acc + mk[a, c] * right[b, 0, c]
                v[a] = acc
            for i in range(k - 1, -1, -1):
                p0 = phi[b, i, 0]
                p1 = phi[b, i, 1]
                g0 = 0.0
                g1 = 0.0
                for a in range(chi):
                    la = left[b, i, a]
                    if la == 0.0:
                        continue
                    for c in range(chi):
                        gc[i, a, 0, c] += la * p0 * v[c]
                        gc[i, a, 1, c] += la * p1 * v[c]
                        g0 = g0 + la * cores[i, a, 0, c] * v[c]
                        g1 = g1 + la * cores[i, a, 1, c] * v[c]
                gp[b, i, 0] = g0
                gp[b, i, 1] = g1
                if i > 0:
                    for a in range(chi):
                        acc = 0.0
                        for c in range(chi):
                            acc = acc + (p0 * cores[i, a, 0, c] + p1 * cores[i, a, 1, c]) * v[c]
                        t[a] = acc
                    for a in range(chi):
                        v[a] = t[a]

            # rightward sweep
            for c in range(chi):
                acc = 0.0
                for a in range(chi):
                    acc = acc + left[b, k, a] * mk[a, c]
                v[c] = acc
            for i in range(k + 1, n_sites):
                p0 = phi[b, i, 0]
                p1 = phi[b, i, 1]
                g0 = 0.0
                g1 = 0.0
                for a in range(chi):
                    x0 = v[a]
                    if x0 == 0.0:
                        continue
                    for c in range(chi):
                        rc = right[b, i - k, c]
                        gc[i, a, 0, c] += x0 * p0 * rc
                        gc[i, a, 1, c] += x0 * p1 * rc
                        g0 = g0 + x0 * cores[i, a, 0, c] * rc
                        g1 = g1 + x0 * cores[i, a, 1, c] * rc
                gp[b, i, 0] = g0
                gp[b, i, 1] = g1
                if i < n_sites - 1:
                    for c in range(chi):
                        acc = 0.0
                        for a in range(chi):
                            acc = acc + v[a] * (p0 * cores[i, a, 0, c] + p1 * cores[i, a, 1, c])
                        t[c] = acc
                    for c in range(chi):
                        v[c] = t[c]
    products = max(k - 1, 0) + max(n_sites - k - 2, 0)
    return gc_arr, go_arr, gp_arr, int(products)
