# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``ssam.kernels``.

Same contracts as the ``py_*`` fallbacks; plain C loops beat numpy on
the tiny per-iteration arrays these see.
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def project_box(x, lower, upper):
    cdef const double[::1] xv = x
    cdef const double[::1] lo = lower
    cdef const double[::1] hi = upper
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double v
    for i in range(n):
        v = xv[i]
        if v < lo[i]:
            v = lo[i]
        elif v > hi[i]:
            v = hi[i]
        ov[i] = v
    return out


def ybar_eta(x, z, double beta, lower, upper):
    cdef const double[::1] xv = x
    cdef const double[::1] zv = z
    cdef const double[::1] lo = lower
    cdef const double[::1] hi = upper
    cdef Py_ssize_t n = xv.shape[0]
    y = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = y
    cdef Py_ssize_t i
    cdef double v, d, lin = 0.0, quad = 0.0
    for i in range(n):
        v = xv[i] - zv[i] / beta
        if v < lo[i]:
            v = lo[i]
        elif v > hi[i]:
            v = hi[i]
        yv[i] = v
        d = v - xv[i]
        lin += zv[i] * d
        quad += d * d
    return y, lin + 0.5 * beta * quad, sqrt(quad)


cdef void _matvec(const double[:, ::1] W, const double[::1] v, double[::1] out) noexcept:
    cdef Py_ssize_t r = W.shape[0], c = W.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(r):
        acc = 0.0
        for j in range(c):
            acc += W[i, j] * v[j]
        out[i] = acc


def relu_forward(list layers, x):
    cdef Py_ssize_t L = len(layers)
    s = [x]
    preacts = []
    cdef Py_ssize_t ell, i, n
    cdef double[::1] pv, av
    cur = x
    for ell in range(L - 1):
        p = np.empty(layers[ell].shape[0], dtype=np.float64)
        _matvec(layers[ell], cur, p)
        preacts.append(p)
        act = np.empty_like(p)
        pv = p
        av = act
        n = pv.shape[0]
        for i in range(n):
            av[i] = pv[i] if pv[i] > 0.0 else 0.0
        s.append(act)
        cur = act
    y = np.empty(layers[L - 1].shape[0], dtype=np.float64)
    _matvec(layers[L - 1], cur, y)
    return s, preacts, y


def relu_loss_grad(list layers, x, target, out):
    cdef Py_ssize_t L = len(layers)
    s, preacts, y = relu_forward(layers, x)
    cdef const double[::1] yv = y
    cdef const double[::1] tv = target
    cdef double[::1] ov = out
    cdef Py_ssize_t m = yv.shape[0]
    cdef Py_ssize_t pos = ov.shape[0]
    cdef Py_ssize_t i, j, r, c, ell
    cdef double loss = 0.0, acc

    v = np.empty(m, dtype=np.float64)
    cdef const double[::1] vv = v
    cdef double[::1] vw = v
    for i in range(m):
        vw[i] = yv[i] - tv[i]
        loss += vw[i] * vw[i]
    loss *= 0.5

    cdef const double[:, ::1] Wv
    cdef const double[::1] sv, pv
    cdef double[::1] nxt
    for ell in range(L - 1, -1, -1):
        Wv = layers[ell]
        r = Wv.shape[0]
        c = Wv.shape[1]
        sv = s[ell]
        pos -= r * c
        for i in range(r):
            for j in range(c):
                ov[pos + i * c + j] = vv[i] * sv[j]
        if ell > 0:
            pv = preacts[ell - 1]
            buf = np.empty(c, dtype=np.float64)
            nxt = buf
            for j in range(c):
                if pv[j] > 0.0:
                    acc = 0.0
                    for i in range(r):
                        acc += Wv[i, j] * vv[i]
                    nxt[j] = acc
                else:
                    nxt[j] = 0.0
            vv = buf
    return loss
