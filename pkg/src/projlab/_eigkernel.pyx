# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel for the dense symmetric eigenproblem.

Householder reduction to tridiagonal form followed by implicit-shift QL
iteration with eigenvector accumulation. Mirrors ``_eigkernel_py`` exactly;
the two are interchangeable behind ``projlab._backend``.
"""
import numpy as np

from libc.math cimport fabs, sqrt, hypot, copysign
from libc.float cimport DBL_EPSILON


cdef void _tridiagonalize(double[:, ::1] a, double[::1] d, double[::1] e,
                          double[:, ::1] zt, double[::1] v,
                          double[::1] p) noexcept nogil:
    # On exit a is destroyed, zt holds Q^T (row i = column i of Q).
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double norm, alpha, vtp, s

    for i in range(n):
        for j in range(n):
            zt[i, j] = 0.0
        zt[i, i] = 1.0

    for k in range(n - 2):
        norm = 0.0
        for i in range(k + 1, n):
            norm += a[i, k] * a[i, k]
        norm = sqrt(norm)
        if norm == 0.0:
            e[k] = 0.0
            continue
        alpha = -copysign(norm, a[k + 1, k])
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        s = 0.0
        for i in range(k + 1, n):
            s += v[i] * v[i]
        s = sqrt(s)
        if s == 0.0:
            e[k] = a[k + 1, k]
            continue
        for i in range(k + 1, n):
            v[i] /= s
        # p = A22 v
        vtp = 0.0
        for i in range(k + 1, n):
            p[i] = 0.0
            for j in range(k + 1, n):
                p[i] += a[i, j] * v[j]
            vtp += v[i] * p[i]
        # q = p - (v.p) v ;  A22 -= 2 (v q^T + q v^T)
        for i in range(k + 1, n):
            p[i] -= vtp * v[i]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i, j] -= 2.0 * (v[i] * p[j] + p[i] * v[j])
        e[k] = alpha
        # accumulate Q <- Q H_k, stored transposed: rows k+1.. of zt
        for j in range(n):
            s = 0.0
            for i in range(k + 1, n):
                s += zt[i, j] * v[i]
            s *= 2.0
            for i in range(k + 1, n):
                zt[i, j] -= s * v[i]

    for i in range(n):
        d[i] = a[i, i]
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    e[n - 1] = 0.0


cdef Py_ssize_t _implicit_ql(double[::1] d, double[::1] e, double[:, ::1] zt,
                             int max_iter) noexcept nogil:
    # Returns 0 on success, l + 1 if eigenvalue l exhausted its budget.
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t l, m, i, k
    cdef int it
    cdef double g, r, s, c, p, f, b, dd, zi, zi1
    cdef double floor = 0.0
    cdef bint underflow

    # absolute deflation floor eps * ||tridiag||, so clusters of near-zero
    # eigenvalues cannot stall the relative test
    for i in range(n):
        dd = fabs(d[i]) + fabs(e[i])
        if i > 0:
            dd += fabs(e[i - 1])
        if dd > floor:
            floor = dd
    floor *= DBL_EPSILON

    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= DBL_EPSILON * dd or fabs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l + 1
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(n):
                    zi = zt[i, k]
                    zi1 = zt[i + 1, k]
                    zt[i + 1, k] = s * zi + c * zi1
                    zt[i, k] = c * zi - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def eigh_kernel(a, int max_iter=60):
    """Eigen-decompose the symmetric matrix ``a``.

    Returns ``(values, vectors_t, info)``: unsorted eigenvalues, the
    eigenvectors as rows of ``vectors_t``, and ``info`` (0 on success,
    otherwise one plus the index whose iteration budget ran out).
    """
    cdef double[:, ::1] work = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = work.shape[0]
    d = np.empty(n)
    e = np.zeros(n)
    zt = np.empty((n, n))
    cdef double[::1] dv = d
    cdef double[::1] ev = e
    cdef double[:, ::1] ztv = zt
    cdef double[::1] v = np.empty(n)
    cdef double[::1] p = np.empty(n)
    cdef Py_ssize_t info
    if n == 0:
        return d, zt, 0
    with nogil:
        _tridiagonalize(work, dv, ev, ztv, v, p)
        info = _implicit_ql(dv, ev, ztv, max_iter)
    return d, zt, int(info)
