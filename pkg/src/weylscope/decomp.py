"""Curvature operator on two-forms, its irreducible blocks and the W+ spectrum.

The operator convention is ``Rm(e_i ^ e_j) = sum_{k<l} R_ijkl e_k ^ e_l`` on
unit bivectors, so the unit four-sphere has ``Rm = I`` and
``trace(Rm) = S / 2``. Block ``A`` acts on the self-dual triple, ``C`` on the
anti-self-dual triple and ``B`` couples them (traceless Ricci).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, FrameMismatchError, NumericalInstabilityError, TraceViolationError
from .frames import _SD

SELF_DUAL = "self-dual"
ANTI_SELF_DUAL = "anti-self-dual"
DEGENERACY_GAP = 1e-8


@dataclass(frozen=True, eq=False)
class CurvatureOperator:
    matrix: np.ndarray
    frame: object = None

    @property
    def A(self):
        return self.matrix[:3, :3]

    @property
    def B(self):
        return self.matrix[:3, 3:]

    @property
    def C(self):
        return self.matrix[3:, 3:]


@dataclass(frozen=True, eq=False)
class WeylBlock:
    """Trace-free 3x3 block W+ or W-, with the scalar curvature it was split from.

    ``trace_defect`` records the trace removed by :func:`extract_weyl`.
    """

    w: np.ndarray
    scalar: float
    side: str = SELF_DUAL
    trace_defect: float = 0.0

    @property
    def norm(self):
        return float(np.linalg.norm(self.w))


@dataclass(frozen=True, eq=False)
class WeylSpectrum:
    """Eigenvalues ascending, eigenvectors as columns (coefficients in the Lambda basis).

    ``degenerate[i]`` is True when eigenvalue i lies within the degeneracy gap
    of another one; its eigenvector is then only one choice of orthonormal
    completion inside the cluster.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degenerate: tuple
    sweeps: int = 0

    @property
    def lambda1(self):
        return float(self.eigenvalues[0])

    @property
    def lambda2(self):
        return float(self.eigenvalues[1])

    @property
    def lambda3(self):
        return float(self.eigenvalues[2])

    def isolated(self, index, gap):
        """True when eigenvalue ``index`` is separated from the others by more than ``gap``."""
        lam = self.eigenvalues
        others = np.delete(lam, index)
        return bool(np.min(np.abs(others - lam[index])) > gap)


def operator_matrix(riemann, bivectors):
    """<Rm a, b> = 1/4 a^{ij} R_ijkl b^{kl} for batched bivectors (N, m, 4, 4)."""
    m = 0.25 * np.einsum("naij,nijkl,nbkl->nab", bivectors, riemann, bivectors)
    return 0.5 * (m + m.transpose(0, 2, 1))


def curvature_operator(cd, basis):
    """Assemble the 6x6 curvature operator of ``cd`` in ``basis``."""
    if basis.frame is not cd.frame and not (
        np.array_equal(basis.frame.vectors, cd.frame.vectors)
        and basis.frame.orientation == cd.frame.orientation
    ):
        raise FrameMismatchError("bivector basis was not built from this point's frame")
    m = operator_matrix(cd.riemann[None], basis.contravariant[None])[0]
    tr, half_s = np.trace(m), 0.5 * cd.scalar
    if abs(tr - half_s) > 1e-8 * max(abs(half_s), np.abs(m).max(), 1e-12):
        raise NumericalInstabilityError(f"trace(Rm) = {tr!r} but S/2 = {half_s!r}")
    return CurvatureOperator(matrix=m, frame=basis.frame)


def _trace_free(block, scalar):
    w = block - (scalar / 12.0) * np.eye(3)
    w = 0.5 * (w + np.swapaxes(w, -1, -2))
    tr = np.trace(w, axis1=-2, axis2=-1)
    return w, tr


def extract_weyl(op, S, side=SELF_DUAL):
    """W = block - (S/12) I for the chosen side.

    Raises TraceViolationError when the block trace is inconsistent with
    ``S`` (beyond 1e-6 relative); any smaller residual trace is projected
    out and kept in ``trace_defect``.
    """
    if side not in (SELF_DUAL, ANTI_SELF_DUAL):
        raise ValueError(f"side must be {SELF_DUAL!r} or {ANTI_SELF_DUAL!r}")
    block = op.A if side == SELF_DUAL else op.C
    w, tr = _trace_free(block, S)
    bound = 1e-6 * max(np.linalg.norm(w), abs(S), 1e-12)
    if abs(tr) > bound:
        raise TraceViolationError(f"{side} block trace {tr:.3e} exceeds {bound:.3e}; S inconsistent with operator")
    w = w - (tr / 3.0) * np.eye(3)
    return WeylBlock(w=w, scalar=float(S), side=side, trace_defect=float(tr))


def spectrum_batch(w, backend=None):
    """Ascending eigenvalues (N, 3), eigenvectors (N, 3, 3) and sweep counts."""
    w = np.asarray(w, dtype=np.float64)
    vals, vecs, sweeps = _kernels.jacobi_eigh3(w, tol=1e-14, max_sweeps=50, backend=backend)
    if np.any(sweeps < 0):
        raise ConvergenceError("Jacobi iteration did not reach 1e-14 relative off-diagonal norm in 50 sweeps")
    return vals, vecs, sweeps


def spectrum(w, backend=None):
    """Spectrum of a WeylBlock (or raw symmetric 3x3 matrix) by cyclic Jacobi.

    Eigenvalue gaps below ``1e-8 * ||w||`` are flagged in ``degenerate``; the
    eigenvectors inside such a cluster are only an orthonormal completion.
    """
    m = w.w if isinstance(w, WeylBlock) else np.asarray(w, dtype=np.float64)
    vals, vecs, sweeps = spectrum_batch(m[None], backend=backend)
    vals, vecs = vals[0], vecs[0]
    gap = DEGENERACY_GAP * np.linalg.norm(m)
    low, high = bool(vals[1] - vals[0] <= gap), bool(vals[2] - vals[1] <= gap)
    flags = (low, low or high, high)
    return WeylSpectrum(eigenvalues=vals, eigenvectors=vecs, degenerate=flags, sweeps=int(sweeps[0]))


def adjoint_matrix(w):
    """Adjugate of a symmetric 3x3 matrix (or batch), basis-free.

    By Cayley-Hamilton, adj(w) = w^2 - tr(w) w + 1/2 (tr(w)^2 - tr(w^2)) I; in
    an eigenbasis this is diag(l2 l3, l1 l3, l1 l2).
    """
    m = w.w if isinstance(w, WeylBlock) else np.asarray(w, dtype=np.float64)
    sq = m @ m
    tr = np.trace(m, axis1=-2, axis2=-1)[..., None, None]
    tr2 = np.trace(sq, axis1=-2, axis2=-1)[..., None, None]
    return sq - tr * m + 0.5 * (tr ** 2 - tr2) * np.eye(3)


def _weitzenbock_first(m, S):
    return 0.5 * S * m - 2.0 * (m @ m) - 4.0 * adjoint_matrix(m)


def _weitzenbock_second(m, S):
    norm2 = np.einsum("...ij,...ij->...", m, m)[..., None, None]
    return 0.5 * S * m - 6.0 * (m @ m) + 2.0 * norm2 * np.eye(3)


def weitzenbock_rhs(w, S, form="first"):
    """Algebraic right-hand side of the harmonic-W+ Weitzenbock formula.

    ``form="first"``:  S/2 W - 2 W^2 - 4 W^#
    ``form="second"``: S/2 W - 6 W o W + 2 |W|^2 I

    Both are evaluated; they must agree to 1e-12 relative, which only holds
    for trace-free input.
    """
    m = w.w if isinstance(w, WeylBlock) else np.asarray(w, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    Sb = S[..., None, None]
    scale = np.linalg.norm(m, axis=(-2, -1))
    tr = np.trace(m, axis1=-2, axis2=-1)
    if np.any(np.abs(tr) > 1e-10 * np.maximum(scale, 1e-300) + 1e-300):
        raise TraceViolationError("Weitzenbock right-hand side needs a trace-free W")
    first = _weitzenbock_first(m, Sb)
    second = _weitzenbock_second(m, Sb)
    size = np.maximum(np.abs(S) * scale, scale ** 2)
    diff = np.linalg.norm(first - second, axis=(-2, -1))
    if np.any(diff > 1e-12 * size + 1e-300):
        raise TraceViolationError(f"Weitzenbock forms disagree by {np.max(diff):.3e}")
    if form == "first":
        return first
    if form == "second":
        return second
    raise ValueError("form must be 'first' or 'second'")


def _check_trace_free(lam):
    lam = np.asarray(lam, dtype=np.float64)
    scale = np.maximum(1.0, np.abs(lam).max(axis=-1))
    if np.any(np.abs(lam.sum(axis=-1)) > 1e-12 * scale):
        raise TraceViolationError("eigenvalue triple must sum to zero")
    return lam


def eigenvalue_inequality_identity(lam, S):
    """Defect of Delta(l3 - l1) right-hand sides against 6 (l3 - l1)(l2 + S/12).

    Returns ``[S/2 l3 - 2 l3^2 - 4 l1 l2] - [S/2 l1 - 2 l1^2 - 4 l2 l3]
    - 6 (l3 - l1)(l2 + S/12)``, which vanishes for every trace-free triple.
    Vectorized over leading axes.
    """
    lam = _check_trace_free(lam)
    S = np.asarray(S, dtype=np.float64)
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    upper = 0.5 * S * l3 - 2.0 * l3 ** 2 - 4.0 * l1 * l2
    lower = 0.5 * S * l1 - 2.0 * l1 ** 2 - 4.0 * l2 * l3
    return upper - lower - 6.0 * (l3 - l1) * (l2 + S / 12.0)


def root_factorization(lam, S, which="lambda1"):
    """Unfactored and factored forms of S/2 l - 2 l^2 - 4 l' l''.

    Uses the substitutions l' = -S/12 (middle eigenvalue) and
    l'' = -l - l' (trace-free closure); the factored form is
    -2 (l + S/12)(l - S/6). ``which`` selects the lambda1 or lambda3 reading,
    which coincide after the substitution.
    """
    if which not in ("lambda1", "lambda3"):
        raise ValueError("which must be 'lambda1' or 'lambda3'")
    lam = np.asarray(lam, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    middle = -S / 12.0
    other = -lam - middle
    unfactored = 0.5 * S * lam - 2.0 * lam ** 2 - 4.0 * middle * other
    factored = -2.0 * (lam + S / 12.0) * (lam - S / 6.0)
    return unfactored, factored


def eigenvalue_laplacian_terms(lam, S, grad_a=0.0, grad_b=0.0, grad_c=0.0):
    """Right-hand sides of Delta l1, Delta l2, Delta l3 on a simple-spectrum locus.

    ``grad_a``, ``grad_b``, ``grad_c`` are the squared norms of the one-form
    terms coupling (l1, l2), (l2, l3) and (l1, l3). Returns shape (..., 3).
    """
    lam = _check_trace_free(lam)
    S = np.asarray(S, dtype=np.float64)
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    d1 = 2 * (l1 - l2) * grad_a + 2 * (l1 - l3) * grad_c + 0.5 * S * l1 - 2 * l1 ** 2 - 4 * l2 * l3
    d2 = 2 * (l2 - l1) * grad_a + 2 * (l2 - l3) * grad_b + 0.5 * S * l2 - 2 * l2 ** 2 - 4 * l1 * l3
    d3 = 2 * (l3 - l1) * grad_c + 2 * (l3 - l2) * grad_b + 0.5 * S * l3 - 2 * l3 ** 2 - 4 * l1 * l2
    return np.stack([d1, d2, d3], axis=-1)


def refined_gap_identity(lam, S, grad_a, grad_b, grad_c):
    """Defect of Delta(l3 - l1) against its gradient-refined lower bound (zero identically)."""
    d = eigenvalue_laplacian_terms(lam, S, grad_a, grad_b, grad_c)
    lam = np.asarray(lam, dtype=np.float64)
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    bound = (6 * (l3 - l1) * (l2 + np.asarray(S) / 12.0) + 4 * (l3 - l1) * grad_c
             + 2 * (l3 - l2) * grad_b + 2 * (l2 - l1) * grad_a)
    return d[..., 2] - d[..., 0] - bound


# -- synthetic algebraic curvature operators --------------------------------

def _kulkarni_nomizu(h, k):
    """(h o k)_ijkl for symmetric 4x4 h, k in an orthonormal frame."""
    return (np.einsum("...ik,...jl->...ijkl", h, k) + np.einsum("...jl,...ik->...ijkl", h, k)
            - np.einsum("...il,...jk->...ijkl", h, k) - np.einsum("...jk,...il->...ijkl", h, k))


def operator_to_tensor(matrix):
    """Orthonormal-frame R_ijkl of a 6x6 operator given in the adapted basis."""
    return np.einsum("...ab,aij,bkl->...ijkl", matrix, _SD, _SD)


def tensor_to_operator(r):
    """Inverse of :func:`operator_to_tensor` (frame components)."""
    m = 0.25 * np.einsum("aij,...ijkl,bkl->...ab", _SD, r, _SD)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def assemble_operator(S, traceless_ricci, w_plus, w_minus):
    """Build the 6x6 operator from its irreducible pieces (orthonormal frame).

    Rm = W+ (+) W- + (S/12) I with the off-diagonal block carrying the traceless
    Ricci tensor ``E`` through the Kulkarni-Nomizu product E o g / 2.
    """
    S = np.asarray(S, dtype=np.float64)
    E = np.asarray(traceless_ricci, dtype=np.float64)
    ric_part = tensor_to_operator(0.5 * _kulkarni_nomizu(E, np.broadcast_to(np.eye(4), E.shape)))
    m = np.zeros(E.shape[:-2] + (6, 6))
    m[..., :3, :3] = w_plus
    m[..., 3:, 3:] = w_minus
    m += (S[..., None, None] / 12.0) * np.eye(6)
    return m + ric_part


def decompose_operator(matrix):
    """Recover ``(S, traceless_ricci, W+, W-)`` from a 6x6 operator in the adapted basis."""
    m = np.asarray(matrix, dtype=np.float64)
    S = 2.0 * np.trace(m, axis1=-2, axis2=-1)
    r = operator_to_tensor(m)
    ricci = np.einsum("...ijil->...jl", r)
    E = ricci - (S[..., None, None] / 4.0) * np.eye(4)
    eye3 = np.eye(3)
    wp = m[..., :3, :3] - (S[..., None, None] / 12.0) * eye3
    wm = m[..., 3:, 3:] - (S[..., None, None] / 12.0) * eye3
    return S, E, wp, wm


def random_pieces(rng, n):
    """Random (S, traceless Ricci, W+, W-) with entries uniform in [-1, 1], S in [-24, 24]."""

    def traceless_sym(dim):
        a = rng.uniform(-1.0, 1.0, size=(n, dim, dim))
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        return a - (np.trace(a, axis1=-2, axis2=-1)[:, None, None] / dim) * np.eye(dim)

    return rng.uniform(-24.0, 24.0, size=n), traceless_sym(4), traceless_sym(3), traceless_sym(3)
