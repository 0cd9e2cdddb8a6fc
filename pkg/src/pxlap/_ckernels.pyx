# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def grad_1d(const double[:, ::1] u, double h):
    cdef Py_ssize_t m = u.shape[0] - 1, N = u.shape[1], i, k
    out = np.empty((m, 1, N))
    cdef double[:, :, ::1] o = out
    cdef double inv = 1.0 / h
    for i in range(m):
        for k in range(N):
            o[i, 0, k] = (u[i + 1, k] - u[i, k]) * inv
    return out


def grad_2d(const double[:, :, ::1] u, double hx, double hy):
    cdef Py_ssize_t m1 = u.shape[0] - 1, m2 = u.shape[1] - 1, N = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double sx = 0.5 / hx, sy = 0.5 / hy
    cdef double sw, se, nw, ne
    out = np.empty((m1, m2, 2, N))
    cdef double[:, :, :, ::1] o = out
    for i in range(m1):
        for j in range(m2):
            for k in range(N):
                sw = u[i, j, k]
                se = u[i + 1, j, k]
                nw = u[i, j + 1, k]
                ne = u[i + 1, j + 1, k]
                o[i, j, 0, k] = (se + ne - sw - nw) * sx
                o[i, j, 1, k] = (nw + ne - sw - se) * sy
    return out


def grad_t_1d(const double[:, :, ::1] F, double h):
    cdef Py_ssize_t m = F.shape[0], N = F.shape[2], i, k
    cdef double f, inv = 1.0 / h
    out = np.zeros((m + 1, N))
    cdef double[:, ::1] o = out
    for i in range(m):
        for k in range(N):
            f = F[i, 0, k] * inv
            o[i + 1, k] += f
            o[i, k] -= f
    return out


def grad_t_2d(const double[:, :, :, ::1] F, double hx, double hy):
    cdef Py_ssize_t m1 = F.shape[0], m2 = F.shape[1], N = F.shape[3]
    cdef Py_ssize_t i, j, k
    cdef double sx = 0.5 / hx, sy = 0.5 / hy, fx, fy
    out = np.zeros((m1 + 1, m2 + 1, N))
    cdef double[:, :, ::1] o = out
    for i in range(m1):
        for j in range(m2):
            for k in range(N):
                fx = F[i, j, 0, k] * sx
                fy = F[i, j, 1, k] * sy
                o[i + 1, j, k] += fx - fy
                o[i + 1, j + 1, k] += fx + fy
                o[i, j, k] -= fx + fy
                o[i, j + 1, k] -= fx - fy
    return out


def coefficients(gsq, p, double mu):
    g = np.ascontiguousarray(gsq, dtype=np.float64).ravel()
    pp = np.ascontiguousarray(np.broadcast_to(p, np.shape(gsq)), dtype=np.float64).ravel()
    cdef const double[::1] gv = g
    cdef const double[::1] pv = pp
    cdef Py_ssize_t n = g.shape[0], i
    a = np.empty(n)
    c = np.empty(n)
    e = np.empty(n)
    cdef double[::1] av = a, cv = c, ev = e
    cdef double s, q, pa
    for i in range(n):
        s = mu + gv[i]
        q = pv[i]
        pa = pow(s, 0.5 * (q - 2.0))
        av[i] = pa
        ev[i] = pa * s / q
        cv[i] = (q - 2.0) * pa / s if s > 0.0 else 0.0
    shape = np.shape(gsq)
    return a.reshape(shape), c.reshape(shape), e.reshape(shape)


def thomas(const double[::1] lower, const double[::1] diag,
           const double[::1] upper, const double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0], i
    cp = np.empty(n)
    x = np.empty(n)
    cdef double[::1] c = cp, xv = x
    cdef double den
    xv[0] = rhs[0] / diag[0]
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    for i in range(1, n):
        den = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / den
        xv[i] = (rhs[i] - lower[i - 1] * xv[i - 1]) / den
    for i in range(n - 2, -1, -1):
        xv[i] -= c[i] * xv[i + 1]
    return x
