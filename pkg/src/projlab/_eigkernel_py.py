"""Pure-Python eigen-kernel, used when the compiled extension is unavailable.

Same algorithm and calling convention as the Cython module ``_eigkernel``:
Householder tridiagonalization, then implicit-shift QL with Wilkinson-type
shifts. Eigenvectors are kept as rows so each plane rotation touches two
contiguous vectors.
"""
import math
import sys

import numpy as np

_EPS = sys.float_info.epsilon


def _tridiagonalize(a):
    n = a.shape[0]
    zt = np.eye(n)
    e = np.zeros(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        norm = math.sqrt(float(x @ x))
        if norm == 0.0:
            e[k] = 0.0
            continue
        alpha = -math.copysign(norm, x[0])
        v = x.copy()
        v[0] -= alpha
        s = math.sqrt(float(v @ v))
        if s == 0.0:
            e[k] = x[0]
            continue
        v /= s
        a22 = a[k + 1:, k + 1:]
        p = a22 @ v
        p -= (v @ p) * v
        a22 -= 2.0 * (np.outer(v, p) + np.outer(p, v))
        e[k] = alpha
        rows = zt[k + 1:, :]
        rows -= 2.0 * np.outer(v, v @ rows)
    d = np.diagonal(a).copy()
    if n >= 2:
        e[n - 2] = a[n - 1, n - 2]
    e[n - 1] = 0.0
    return d, e, zt


def _implicit_ql(d, e, zt, max_iter):
    n = d.shape[0]
    d = d.tolist()
    e = e.tolist()
    floor = _EPS * max(abs(d[i]) + abs(e[i]) + (abs(e[i - 1]) if i else 0.0) for i in range(n))
    hypot = math.hypot
    copysign = math.copysign
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return d, l + 1
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
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
                zi = zt[i].copy()
                zt[i] *= c
                zt[i] -= s * zt[i + 1]
                zt[i + 1] *= c
                zt[i + 1] += s * zi
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, 0


def eigh_kernel(a, max_iter=60):
    """Eigen-decompose the symmetric matrix ``a``.

    Returns ``(values, vectors_t, info)`` with the same meaning as the
    compiled kernel.
    """
    work = np.array(a, dtype=np.float64, order="C", copy=True)
    n = work.shape[0]
    if n == 0:
        return np.empty(0), np.empty((0, 0)), 0
    d, e, zt = _tridiagonalize(work)
    d, info = _implicit_ql(d, e, zt, max_iter)
    return np.asarray(d), zt, info
