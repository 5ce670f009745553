"""Metric evaluation and finite-difference covariant calculus on a single chart.

Everything here is vectorized over points: internal ``*_batch`` helpers take
an ``(N, 4)`` array of chart coordinates and return arrays with a leading
point axis. The public single-point functions validate the point against
the chart (including the finite-difference stencil margin) and call the
batched versions.

Curvature conventions: ``R_ijkl`` is lowered so that the unit sphere has
``R_1212 = +1`` and ``S = 12`` in dimension four, ``Ric_jl = g^{ik} R_ijkl``
and the Laplacian is ``g^{ab} nabla_a nabla_b`` (non-positive spectrum).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DegenerateMetricError, DomainError, NumericalInstabilityError
from .frames import OrthonormalFrame, gram_schmidt_frame

# 4th-order central first-derivative stencil
_NODES = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0])   # divided by 12 h after summing

DEFAULT_STEP = 1e-3
DEFAULT_CURVATURE_STEP = 10.0 ** -3.5
DEFAULT_OUTER_STEP = 10.0 ** -2.5
MARGIN_FACTOR = 5.0


@dataclass(frozen=True)
class ChartDomain:
    """Closed coordinate box ``[lower, upper]`` in R^4."""

    lower: tuple
    upper: tuple
    name: str = "chart"

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 4 or len(hi) != 4:
            raise ValueError("chart domains are boxes in R^4")
        if not all(np.isfinite(lo + hi)) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"invalid chart box {lo} x {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def extent(self):
        return np.subtract(self.upper, self.lower)

    def contains(self, x, margin=0.0):
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.add(self.lower, margin)) & (x <= np.subtract(self.upper, margin)), axis=-1)

    def shrink(self, margin):
        return ChartDomain(np.add(self.lower, margin), np.subtract(self.upper, margin), self.name)


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        if len(c) != 4 or not all(np.isfinite(c)):
            raise ValueError(f"chart points need 4 finite coordinates, got {self.coords!r}")
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True, eq=False)
class MetricPatch:
    """A metric on one chart.

    ``metric`` maps an ``(N, 4)`` array of points to ``(N, 4, 4)`` symmetric
    matrices. ``dmetric``, when given, returns ``(N, 4, 4, 4)`` with
    ``[n, k, i, j] = d_k g_ij``; otherwise first derivatives are taken by
    finite differences.

    Steps: ``step`` differentiates the metric when ``dmetric`` is absent,
    ``curvature_step`` differentiates the Christoffel symbols, and
    ``outer_step`` is used for derivatives that are nested on top of
    another finite difference (fields built from curvature, and both levels
    of the rough Laplacian); plain covariant derivatives use ``step``. All are scaled down on chart axes
    narrower than 1.
    """

    domain: ChartDomain
    metric: Callable
    dmetric: Optional[Callable] = None
    name: str = ""
    einstein_constant: Optional[float] = None
    scalar_curvature: Optional[float] = None
    orientation: int = 1
    step: float = DEFAULT_STEP
    curvature_step: float = DEFAULT_CURVATURE_STEP
    outer_step: float = DEFAULT_OUTER_STEP
    source: Optional[str] = field(default=None, repr=False)

    def steps(self, base):
        """Per-axis finite-difference steps: ``base`` scaled down on narrow axes."""
        return base * np.minimum(1.0, self.domain.extent)

    @property
    def h_max(self):
        return float(np.max(self.steps(max(self.step, self.curvature_step, self.outer_step))))

    def margin(self, depth=1):
        """Stencil margin for nesting ``depth`` (1: curvature, 2: Laplacian)."""
        return MARGIN_FACTOR * depth * self.h_max

    def with_orientation(self, orientation):
        from dataclasses import replace
        return replace(self, orientation=int(orientation))

    def scaled(self, c):
        """The patch for the metric ``c**2 * g`` on the same chart."""
        from dataclasses import replace
        c2 = float(c) ** 2
        metric, dmetric = self.metric, self.dmetric
        return replace(
            self,
            name=f"{self.name}*{c}^2",
            metric=lambda x: c2 * metric(x),
            dmetric=None if dmetric is None else (lambda x: c2 * dmetric(x)),
            einstein_constant=self.einstein_constant,
            scalar_curvature=None if self.scalar_curvature is None else self.scalar_curvature / c2,
        )


def as_points(p):
    """Coerce a ChartPoint, 4-vector or (N, 4) array into an (N, 4) float array."""
    x = np.asarray(p, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != 4:
        raise ValueError(f"expected points of shape (N, 4), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    return x


def check_inside(patch, x, depth=0):
    x = as_points(x)
    margin = patch.margin(depth) if depth else 0.0
    inside = patch.domain.contains(x, margin)
    if not np.all(inside):
        bad = x[np.argmin(inside)]
        raise DomainError(
            f"point {tuple(bad)} is outside {patch.domain.name!r} "
            f"{patch.domain.lower}..{patch.domain.upper} with stencil margin {margin:.3g}"
        )
    return x


def fd_gradient(func, x, steps):
    """4th-order central differences of a batched function.

    ``func`` maps ``(M, 4)`` points to ``(M, *shape)``; the result has shape
    ``(N, 4, *shape)`` with the derivative index right after the point axis.
    """
    x = as_points(x)
    n = x.shape[0]
    steps = np.broadcast_to(np.asarray(steps, dtype=float), (4,))
    disp = np.einsum("d,k,dc->dkc", steps, _NODES, np.eye(4))
    pts = (x[:, None, None, :] + disp[None]).reshape(n * 16, 4)
    vals = np.asarray(func(pts))
    vals = vals.reshape((n, 4, 4) + vals.shape[1:])
    grad = np.einsum("k,ndk...->nd...", _WEIGHTS, vals)
    return grad / (12.0 * steps.reshape((1, 4) + (1,) * (grad.ndim - 2)))


def metric_batch(patch, x):
    g = np.asarray(patch.metric(x), dtype=np.float64)
    if g.shape != (x.shape[0], 4, 4):
        raise ValueError(f"metric evaluator returned shape {g.shape}")
    return g


def _check_positive(g, x):
    eig = np.linalg.eigvalsh(g)
    bad = ~np.isfinite(eig[:, 0]) | (eig[:, 0] <= 1e-10)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DegenerateMetricError(
            f"metric not positive definite at {tuple(x[i])} (smallest eigenvalue {eig[i, 0]:.3e})"
        )


def dmetric_batch(patch, x):
    if patch.dmetric is not None:
        return np.asarray(patch.dmetric(x), dtype=np.float64)
    return fd_gradient(lambda y: metric_batch(patch, y), x, patch.steps(patch.step))


def christoffel_from(g, dg):
    """Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij), shape (N, k, i, j)."""
    ginv = np.linalg.inv(g)
    t = dg + np.einsum("njil->nijl", dg) - np.einsum("nlij->nijl", dg)
    return 0.5 * np.einsum("nkl,nijl->nkij", ginv, t)


def christoffel_batch(patch, x):
    x = as_points(x)
    return christoffel_from(metric_batch(patch, x), dmetric_batch(patch, x))


@dataclass(frozen=True)
class CurvatureBatch:
    """Curvature tensors at N points (plain arrays, leading point axis)."""

    points: np.ndarray
    metric: np.ndarray
    inverse: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    symmetry_residual: np.ndarray
    bianchi_residual: np.ndarray


def project_curvature_symmetries(r):
    """Project onto tensors antisymmetric in (ij), (kl) and symmetric under pair swap."""
    r = 0.25 * (r - r.transpose(0, 2, 1, 3, 4) - r.transpose(0, 1, 2, 4, 3) + r.transpose(0, 2, 1, 4, 3))
    return 0.5 * (r + r.transpose(0, 3, 4, 1, 2))


def bianchi(r):
    """First-Bianchi combination R_ijkl + R_iklj + R_iljk."""
    return r + np.einsum("niklj->nijkl", r) + np.einsum("niljk->nijkl", r)


def curvature_batch(patch, x, backend=None):
    """Riemann, Ricci and scalar curvature at the points ``x``.

    The assembled finite-difference Riemann tensor is projected onto the
    pair symmetries; the size of that correction and the first-Bianchi
    residual of the projected tensor are returned per point.
    """
    x = as_points(x)
    g = metric_batch(patch, x)
    _check_positive(g, x)
    gamma = christoffel_from(g, dmetric_batch(patch, x))
    dgamma = fd_gradient(lambda y: christoffel_batch(patch, y), x, patch.steps(patch.curvature_step))
    raw = _kernels.riemann_lower(g, gamma, dgamma, backend=backend)
    r = project_curvature_symmetries(raw)
    ginv = np.linalg.inv(g)
    ricci = np.einsum("nik,nijkl->njl", ginv, r)
    ricci = 0.5 * (ricci + ricci.transpose(0, 2, 1))
    scalar = np.einsum("njl,njl->n", ginv, ricci)
    sym = np.abs(raw - r).reshape(len(x), -1).max(axis=1)
    bia = np.abs(bianchi(r)).reshape(len(x), -1).max(axis=1)
    scale = np.abs(r).reshape(len(x), -1).max(axis=1) + np.abs(dgamma).reshape(len(x), -1).max(axis=1)
    bound = sym + 1e-9 * (1.0 + scale)
    if np.any(bia > 100.0 * bound):
        i = int(np.argmax(bia / bound))
        raise NumericalInstabilityError(
            f"first Bianchi residual {bia[i]:.3e} at {tuple(x[i])} exceeds 100x the "
            f"finite-difference error estimate {bound[i]:.3e}"
        )
    return CurvatureBatch(x, g, ginv, gamma, r, ricci, scalar, sym, bia)


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """All curvature at one chart point, together with the frame used downstream."""

    point: ChartPoint
    metric: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    frame: OrthonormalFrame
    symmetry_residual: float = 0.0
    bianchi_residual: float = 0.0

    @property
    def traceless_ricci(self):
        return self.ricci - 0.25 * self.scalar * self.metric


def eval_metric(patch, p):
    """g_ij at ``p``; raises DomainError / DegenerateMetricError."""
    x = check_inside(patch, p)
    g = metric_batch(patch, x)
    if not np.allclose(g, g.transpose(0, 2, 1), rtol=0, atol=1e-14 * (1 + np.abs(g).max())):
        raise DegenerateMetricError("metric evaluator returned a non-symmetric matrix")
    _check_positive(g, x)
    return g[0]


def christoffel(patch, p):
    """Gamma^k_ij at ``p`` as an array indexed ``[k, i, j]``."""
    x = check_inside(patch, p, depth=1)
    g = metric_batch(patch, x)
    _check_positive(g, x)
    return christoffel_from(g, dmetric_batch(patch, x))[0]


def riemann(patch, p, orientation=None):
    """CurvatureData at ``p``; the frame uses ``orientation`` (default: the patch's)."""
    x = check_inside(patch, p, depth=1)
    cb = curvature_batch(patch, x)
    orient = patch.orientation if orientation is None else orientation
    return CurvatureData(
        point=ChartPoint(x[0]),
        metric=cb.metric[0],
        gamma=cb.gamma[0],
        riemann=cb.riemann[0],
        ricci=cb.ricci[0],
        scalar=float(cb.scalar[0]),
        frame=gram_schmidt_frame(cb.metric[0], orient, point=x[0]),
        symmetry_residual=float(cb.symmetry_residual[0]),
        bianchi_residual=float(cb.bianchi_residual[0]),
    )


def covariant_derivative_batch(patch, x, field, gamma=None, step=None):
    """nabla T for a covariant tensor field, derivative index first.

    ``field`` maps ``(M, 4)`` points to ``(M, 4, ..., 4)`` (rank r, possibly
    0); the result has shape ``(N, 4, 4, ..., 4)`` (rank r + 1). ``step``
    defaults to ``patch.step``; pass ``patch.outer_step`` when the field is
    itself computed by finite differences.
    """
    x = as_points(x)
    t = np.asarray(field(x))
    dt = fd_gradient(field, x, patch.steps(patch.step if step is None else step))
    if gamma is None:
        gamma = christoffel_batch(patch, x)
    rank = t.ndim - 1
    out = dt
    for slot in range(rank):
        tm = np.moveaxis(t, 1 + slot, -1)
        corr = np.einsum("nkmi,n...k->nm...i", gamma, tm)
        out = out - np.moveaxis(corr, -1, 2 + slot)
    return out


def covariant_derivative(patch, p, field):
    """(nabla T)_{m i1..ir} at ``p``; reduces to partial derivatives when Gamma = 0."""
    x = check_inside(patch, p, depth=1)
    return covariant_derivative_batch(patch, x, field)[0]


def rough_laplacian_batch(patch, x, field):
    x = as_points(x)
    h = patch.outer_step
    inner = lambda y: covariant_derivative_batch(patch, y, field, step=h)
    hess = covariant_derivative_batch(patch, x, inner, step=h)
    ginv = np.linalg.inv(metric_batch(patch, x))
    return np.einsum("nab,nab...->n...", ginv, hess)


def rough_laplacian(patch, p, field):
    """g^{ab} (nabla nabla T)_{ab...} at ``p``, same rank as the field."""
    x = check_inside(patch, p, depth=2)
    return rough_laplacian_batch(patch, x, field)[0]


def tensor_norm(t, ginv):
    """Pointwise g-norm of covariant tensors ``t`` (N, 4, ..., 4)."""
    t = np.asarray(t)
    raised = t
    for slot in range(t.ndim - 1):
        raised = np.moveaxis(np.einsum("nij,n...j->n...i", ginv, np.moveaxis(raised, 1 + slot, -1)), -1, 1 + slot)
    val = (t * raised).reshape(len(t), -1).sum(axis=1)
    return np.sqrt(np.maximum(val, 0.0))
