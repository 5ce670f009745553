# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pure``; same signatures and results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef inline double _off(double[:, :] m) noexcept nogil:
    return sqrt(2.0 * (m[0, 1] * m[0, 1] + m[0, 2] * m[0, 2] + m[1, 2] * m[1, 2]))


cdef inline void _rotate(double[:, :] m, double[:, :] v, int p, int q) noexcept nogil:
    cdef double apq = m[p, q]
    cdef double theta, t, c, s, arp, arq, vp, vq
    cdef int r = 3 - p - q
    cdef int k
    if apq == 0.0:
        return
    theta = (m[q, q] - m[p, p]) / (2.0 * apq)
    if theta == 0.0:
        t = 1.0
    elif theta > 0.0:
        t = 1.0 / (theta + hypot(1.0, theta))
    else:
        t = -1.0 / (-theta + hypot(1.0, theta))
    c = 1.0 / sqrt(1.0 + t * t)
    s = t * c
    arp = m[r, p]
    arq = m[r, q]
    m[p, p] -= t * apq
    m[q, q] += t * apq
    m[p, q] = 0.0
    m[q, p] = 0.0
    m[r, p] = c * arp - s * arq
    m[p, r] = m[r, p]
    m[r, q] = s * arp + c * arq
    m[q, r] = m[r, q]
    for k in range(3):
        vp = v[k, p]
        vq = v[k, q]
        v[k, p] = c * vp - s * vq
        v[k, q] = s * vp + c * vq


def jacobi_sweeps3(a, double tol=1e-14, int max_sweeps=50):
    cdef double[:, :, :] m = np.array(a, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = m.shape[0]
    cdef double[:, :, :] v = np.zeros((n, 3, 3))
    cdef long[:] sweeps = np.full(n, -1, dtype=np.int64)
    cdef Py_ssize_t b
    cdef int i, j, sweep
    cdef double scale
    with nogil:
        for b in range(n):
            for i in range(3):
                v[b, i, i] = 1.0
            scale = 0.0
            for i in range(3):
                for j in range(3):
                    scale += m[b, i, j] * m[b, i, j]
            scale = sqrt(scale)
            if _off(m[b]) <= tol * scale:
                sweeps[b] = 0
                continue
            for sweep in range(1, max_sweeps + 1):
                _rotate(m[b], v[b], 0, 1)
                _rotate(m[b], v[b], 0, 2)
                _rotate(m[b], v[b], 1, 2)
                if _off(m[b]) <= tol * scale:
                    sweeps[b] = sweep
                    break
    mm = np.asarray(m)
    diag = np.stack([mm[:, 0, 0], mm[:, 1, 1], mm[:, 2, 2]], axis=1)
    return diag, np.asarray(v), np.asarray(sweeps)


def riemann_lower(g, gamma, dgamma):
    cdef double[:, :, :] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[:, :, :, :] G = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef double[:, :, :, :, :] dG = np.ascontiguousarray(dgamma, dtype=np.float64)
    cdef Py_ssize_t n = gv.shape[0]
    out = np.zeros((n, 4, 4, 4, 4))
    cdef double[:, :, :, :, :] R = out
    cdef double up[4][4][4][4]
    cdef double acc
    cdef Py_ssize_t b
    cdef int i, j, k, l, mm
    with nogil:
        for b in range(n):
            # up[l][i][j][k] = R^l_{ijk}
            for l in range(4):
                for i in range(4):
                    for j in range(4):
                        for k in range(4):
                            acc = dG[b, i, l, j, k] - dG[b, j, l, i, k]
                            for mm in range(4):
                                acc = acc + G[b, l, i, mm] * G[b, mm, j, k] - G[b, l, j, mm] * G[b, mm, i, k]
                            up[l][i][j][k] = acc
            for i in range(4):
                for j in range(4):
                    for k in range(4):
                        for l in range(4):
                            acc = 0.0
                            for mm in range(4):
                                acc = acc + gv[b, k, mm] * up[mm][i][j][l]
                            R[b, i, j, k, l] = acc
    return out
