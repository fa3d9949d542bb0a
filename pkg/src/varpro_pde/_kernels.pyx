# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled jets and term gradients for single-hidden-layer networks.

Same contract as the matching functions in ``_jets``, restricted to one
hidden layer, where the pre-activation Hessian vanishes and every
parameter derivative has a closed form.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, erfc, sqrt

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double INV_SQRT_2 = 0.7071067811865476


cdef inline void _sigma(int code, double x, double* s) noexcept nogil:
    cdef double c, e, x2, pdf, cdf
    if code == 0:
        c = cos(x)
        e = sin(x)
        s[0] = c; s[1] = -e; s[2] = -c; s[3] = e
    elif code == 1:
        c = cos(x)
        e = sin(x)
        s[0] = e; s[1] = c; s[2] = -e; s[3] = -c
    elif code == 2:
        e = exp(-x * x)
        x2 = x * x
        s[0] = e
        s[1] = -2.0 * x * e
        s[2] = (4.0 * x2 - 2.0) * e
        s[3] = (12.0 * x - 8.0 * x2 * x) * e
    else:
        pdf = INV_SQRT_2PI * exp(-0.5 * x * x)
        cdf = 0.5 * erfc(-x * INV_SQRT_2)
        x2 = x * x
        s[0] = x * cdf
        s[1] = cdf + x * pdf
        s[2] = (2.0 - x2) * pdf
        s[3] = (x2 - 4.0) * x * pdf


def jets_single(double[:, ::1] W, double[::1] b, double[:, ::1] xn,
                double[::1] scale, int code, int order):
    cdef Py_ssize_t M = W.shape[0], d = W.shape[1], N = xn.shape[0]
    cdef Py_ssize_t C = 1 + (d if order >= 1 else 0) + (d * (d + 1) // 2 if order >= 2 else 0)
    out_arr = np.empty((C, N, M))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] z1 = np.empty(d)
    cdef double s[4]
    cdef double z
    cdef Py_ssize_t n, m, i, k, l, p
    with nogil:
        for m in range(M):
            for k in range(d):
                z1[k] = W[m, k] * scale[k]
            for n in range(N):
                z = b[m]
                for i in range(d):
                    z = z + W[m, i] * xn[n, i]
                _sigma(code, z, s)
                out[0, n, m] = s[0]
                if order >= 1:
                    for k in range(d):
                        out[1 + k, n, m] = s[1] * z1[k]
                if order >= 2:
                    p = 1 + d
                    for k in range(d):
                        for l in range(k, d):
                            out[p, n, m] = s[2] * z1[k] * z1[l]
                            p += 1
    return out_arr


def term_gradients_single(double[:, ::1] W, double[::1] b, double[:, ::1] xn,
                          double[::1] scale, int code, int order,
                          double[::1] beta, double[:, ::1] coef):
    cdef Py_ssize_t M = W.shape[0], d = W.shape[1], T = xn.shape[0]
    cdef Py_ssize_t nw = M * d
    out_arr = np.zeros((T, nw + M))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] z1 = np.empty(d)
    cdef double[::1] zb1 = np.empty(d)
    cdef double s[4]
    cdef double z, zb0, cp
    cdef Py_ssize_t t, m, i, k, l, p
    with nogil:
        for m in range(M):
            for k in range(d):
                z1[k] = W[m, k] * scale[k]
            for t in range(T):
                z = b[m]
                for i in range(d):
                    z = z + W[m, i] * xn[t, i]
                _sigma(code, z, s)
                zb0 = s[1] * coef[t, 0]
                for k in range(d):
                    zb1[k] = 0.0
                if order >= 1:
                    for k in range(d):
                        zb0 = zb0 + s[2] * z1[k] * coef[t, 1 + k]
                        zb1[k] = s[1] * coef[t, 1 + k]
                if order >= 2:
                    p = 1 + d
                    for k in range(d):
                        for l in range(k, d):
                            cp = coef[t, p]
                            zb0 = zb0 + s[3] * z1[k] * z1[l] * cp
                            zb1[k] = zb1[k] + s[2] * z1[l] * cp
                            zb1[l] = zb1[l] + s[2] * z1[k] * cp
                            p += 1
                zb0 = zb0 * beta[m]
                for i in range(d):
                    out[t, m * d + i] = zb0 * xn[t, i] + beta[m] * zb1[i] * scale[i]
                out[t, nw + m] = zb0
    return out_arr
