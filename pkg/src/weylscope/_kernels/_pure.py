"""Numpy reference implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable and
the ground truth the compiled versions are benchmarked and tested against.
"""

import numpy as np

_PAIRS = ((0, 1), (0, 2), (1, 2))


def jacobi_sweeps3(a, tol=1e-14, max_sweeps=50):
    """Cyclic Jacobi iteration on a batch of symmetric 3x3 matrices.

    Parameters
    ----------
    a : ndarray, shape (N, 3, 3)
        Symmetric input; not modified.
    tol : float
        Convergence when the off-diagonal Frobenius norm is at most
        ``tol * ||a||_F``.
    max_sweeps : int

    Returns
    -------
    diag : ndarray, shape (N, 3)
        Unsorted eigenvalues.
    vecs : ndarray, shape (N, 3, 3)
        Eigenvectors as columns, matching ``diag``.
    sweeps : ndarray of int, shape (N,)
        Sweeps used per matrix, ``-1`` where convergence failed.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    scale = np.sqrt(np.einsum("nij,nij->n", a, a))
    sweeps = np.full(n, -1, dtype=np.int64)
    idx = np.arange(n)

    def off_norm(m):
        return np.sqrt(2.0 * (m[:, 0, 1] ** 2 + m[:, 0, 2] ** 2 + m[:, 1, 2] ** 2))

    active = off_norm(a) > tol * scale
    sweeps[~active] = 0
    for sweep in range(1, max_sweeps + 1):
        if not active.any():
            break
        sel = idx[active]
        m = a[sel]
        w = v[sel]
        for p, q in _PAIRS:
            r = 3 - p - q
            apq = m[:, p, q]
            nz = apq != 0.0
            theta = np.where(nz, (m[:, q, q] - m[:, p, p]) / np.where(nz, 2.0 * apq, 1.0), 0.0)
            t = np.where(nz, np.sign(theta) / (np.abs(theta) + np.hypot(1.0, theta)), 0.0)
            t = np.where(nz & (theta == 0.0), 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            arp, arq = m[:, r, p].copy(), m[:, r, q].copy()
            m[:, p, p] -= t * apq
            m[:, q, q] += t * apq
            m[:, p, q] = 0.0
            m[:, q, p] = 0.0
            m[:, r, p] = m[:, p, r] = c * arp - s * arq
            m[:, r, q] = m[:, q, r] = s * arp + c * arq
            vp, vq = w[:, :, p].copy(), w[:, :, q].copy()
            w[:, :, p] = c[:, None] * vp - s[:, None] * vq
            w[:, :, q] = s[:, None] * vp + c[:, None] * vq
        a[sel] = m
        v[sel] = w
        done = off_norm(m) <= tol * scale[sel]
        sweeps[sel[done]] = sweep
        active[sel[done]] = False
    diag = np.stack([a[:, 0, 0], a[:, 1, 1], a[:, 2, 2]], axis=1)
    return diag, v, sweeps


def riemann_lower(g, gamma, dgamma):
    """Fully lowered Riemann tensor from Christoffel symbols and their derivatives.

    ``gamma[n, k, i, j]`` is Gamma^k_ij and ``dgamma[n, m, k, i, j]`` its
    partial derivative along coordinate m. The result ``R[n, i, j, k, l]``
    satisfies ``R_1212 = +1`` on the unit sphere.
    """
    # R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    d = np.einsum("niljk->nlijk", dgamma)
    up = d - d.transpose(0, 1, 3, 2, 4)
    quad = np.einsum("nlim,nmjk->nlijk", gamma, gamma)
    up += quad - quad.transpose(0, 1, 3, 2, 4)
    # R_ijkl = g_km R^m_{ijl}
    return np.einsum("nkm,nmijl->nijkl", g, up)
