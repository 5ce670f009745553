"""Orthonormal tetrads, the bivector space and the Hodge star on two-forms.

Bivector conventions
--------------------
A bivector is stored as an antisymmetric 4x4 array ``w`` with
``w = sum_{i<j} w[i, j] e_i ^ e_j``; its norm is ``sum_{i<j} w[i, j]**2``, so
``e_1 ^ e_2`` has unit length. The self-dual basis below is unit-norm; the
Kaehler-form normalization ``|omega|^2 = 2`` used elsewhere is obtained by
multiplying by :data:`KAEHLER_NORM`.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMetricError

KAEHLER_NORM = np.sqrt(2.0)

#: ordering of the coordinate bivectors e_ij used by :func:`hodge_star`
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

# Hodge star of e_ij in an oriented orthonormal frame, basis order PAIRS
_STAR = np.zeros((6, 6))
for _src, _dst, _sgn in ((0, 5, 1), (1, 4, -1), (2, 3, 1), (3, 2, 1), (4, 1, -1), (5, 0, 1)):
    _STAR[_dst, _src] = _sgn

# unit self-dual/anti-self-dual bivectors in frame components, order w1+ w2+ w3+ w1- w2- w3-
_SD = np.zeros((6, 4, 4))
for _a, (_p, _q) in enumerate((((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))):
    for _s, _sign in ((0, 1.0), (3, -1.0)):
        _SD[_a + _s, _p[0], _p[1]] = 1.0
        _SD[_a + _s, _q[0], _q[1]] = _sign
_SD = (_SD - _SD.transpose(0, 2, 1)) / np.sqrt(2.0)


def bivector(i, j):
    """Frame components of e_i ^ e_j (0-based indices)."""
    w = np.zeros((4, 4))
    w[i, j], w[j, i] = 1.0, -1.0
    return w


def bivector_norm2(w):
    """Squared norm sum_{i<j} w_ij^2 of bivectors given in orthonormal components."""
    w = np.asarray(w)
    return 0.5 * np.einsum("...ij,...ij->...", w, w)


@dataclass(frozen=True, eq=False)
class OrthonormalFrame:
    """Four g-orthonormal vectors; ``vectors[a]`` holds the chart components of e_a.

    ``orientation`` is the sign of the frame relative to the chart's coordinate
    order.
    """

    vectors: np.ndarray
    orientation: int = 1
    point: np.ndarray = field(default=None)

    def dual(self):
        """Coframe: row a holds the components of the one-form e^a."""
        return np.linalg.inv(self.vectors).T

    def to_frame(self, tensor):
        """Express a covariant coordinate tensor of any rank in this frame."""
        t = np.asarray(tensor)
        for axis in range(t.ndim):
            t = np.moveaxis(np.tensordot(self.vectors, t, axes=([1], [axis])), 0, axis)
        return t

    def bivector_to_coords(self, w):
        """Contravariant chart components w^{ij} of frame-component bivectors ``w``."""
        return np.einsum("...ab,ai,bj->...ij", w, self.vectors, self.vectors)


def _check_metric(g):
    g = np.asarray(g, dtype=np.float64)
    if g.shape[-2:] != (4, 4):
        raise ValueError(f"metric must be 4x4, got shape {g.shape}")
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if not np.all(np.isfinite(eig)) or np.any(eig[..., 0] <= 1e-10):
        raise DegenerateMetricError(f"metric not positive definite (min eigenvalue {np.nanmin(eig[..., 0]):.3e})")
    return g


def frame_vectors(g, orientation=1):
    """Batched Gram-Schmidt: frame arrays of shape (..., 4, 4) for metrics (..., 4, 4)."""
    g = _check_metric(g)
    # Gram-Schmidt in index order == inverse Cholesky factor
    L = np.linalg.cholesky(g)
    E = np.linalg.inv(L)
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    if orientation == -1:
        E = E.copy()
        E[..., 3, :] *= -1.0
    return E


def gram_schmidt_frame(g, orientation=1, point=None):
    """Orthonormalize the coordinate basis of ``g`` in index order.

    Coordinate vectors are processed as d_1, d_2, d_3, d_4 without pivoting.
    For ``orientation=-1`` the last vector is negated, giving a frame that is
    positively oriented for the reversed orientation.
    """
    E = frame_vectors(g, orientation)
    return OrthonormalFrame(vectors=E, orientation=int(orientation),
                            point=None if point is None else np.asarray(point, dtype=float))


def hodge_star(frame):
    """Hodge star on bivectors, as a 6x6 matrix in the e_ij basis of ``frame``.

    The star is taken with respect to the chart orientation, so a frame with
    ``orientation=-1`` sends e_1^e_2 to -e_3^e_4.
    """
    return frame.orientation * _STAR


def projectors(frame):
    """Return ``(P+, P-) = ((I + *)/2, (I - *)/2)`` in the e_ij basis."""
    star = hodge_star(frame)
    eye = np.eye(6)
    return 0.5 * (eye + star), 0.5 * (eye - star)


@dataclass(frozen=True, eq=False)
class BivectorBasis:
    """Unit bivectors adapted to a frame: three self-dual then three anti-self-dual.

    Self-duality refers to the orientation the frame was built for, so it is
    the chart orientation when ``frame.orientation == 1`` and its reverse
    otherwise.

    Attributes
    ----------
    frame : OrthonormalFrame
    components : ndarray (6, 4, 4)
        Frame components (constant).
    contravariant : ndarray (6, 4, 4)
        Chart components w^{ij}.
    """

    frame: OrthonormalFrame
    components: np.ndarray
    contravariant: np.ndarray

    @property
    def hodge(self):
        """Hodge star of the frame's orientation in this basis: diag(1, 1, 1, -1, -1, -1)."""
        return np.diag([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])

    def coordinate_matrix(self):
        """6x6 matrix whose column a expresses basis bivector a in the e_ij basis."""
        return np.array([[c[i, j] for c in self.components] for i, j in PAIRS])

    def covariant(self, g):
        """Chart components w_ij, lowered with ``g``."""
        return np.einsum("ik,akl,lj->aij", g, self.contravariant, g)


def selfdual_basis(frame):
    """Build the basis (e12 +- e34, e13 +- e42, e14 +- e23) / sqrt(2) of ``frame``."""
    return BivectorBasis(frame=frame, components=_SD.copy(),
                         contravariant=frame.bivector_to_coords(_SD))


def selfdual_contravariant(E):
    """Batched chart components (..., 6, 4, 4) of the adapted basis for frames ``E``."""
    return np.einsum("xab,...ai,...bj->...xij", _SD, E, E)
