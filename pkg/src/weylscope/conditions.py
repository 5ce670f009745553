"""Curvature conditions and differential identities, pointwise and over grids.

Pointwise checks take an already computed spectrum/block; the residual
functions (`weitzenbock_residual`, `divergence_residual`,
`kahler_form_parallel`) drive the finite-difference engine themselves.
Grid sweeps sample the chart box shrunk by the stencil margin: "everywhere"
always means "at every sampled point of this chart".
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decomp import adjoint_matrix, operator_matrix, spectrum_batch, weitzenbock_rhs  # noqa: F401
from .errors import BudgetExceededError, DegenerateEigenvectorError
from .frames import KAEHLER_NORM, frame_vectors, selfdual_contravariant
from .tensor import (
    as_points,
    check_inside,
    covariant_derivative_batch,
    curvature_batch,
    metric_batch,
    rough_laplacian_batch,
    tensor_norm,
)

ALGEBRAIC_CONDITIONS = ("middle_eigenvalue", "half_pic", "asd", "kahler_spectrum")
FD_CONDITIONS = ("weitzenbock", "divergence", "parallel_form")
CONDITIONS = ALGEBRAIC_CONDITIONS + FD_CONDITIONS

TOL_ALGEBRAIC = 1e-10
TOL_FD = 1e-4
DEFAULT_BUDGET = 10 ** 6
ISOLATION_GAP = 1e-6
CAVEAT = "chart-sampled; not a global certificate"


@dataclass(frozen=True)
class Tolerances:
    """``algebraic``: relative, for exact identities; ``fd``: absolute, for anything
    carrying finite-difference error (margins on engine curvature included)."""

    algebraic: float = TOL_ALGEBRAIC
    fd: float = TOL_FD


@dataclass(frozen=True)
class Check:
    """A residual or margin with the tolerance and verdict derived from it."""

    value: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)


# -- pointwise engine quantities ---------------------------------------------

@dataclass(frozen=True, eq=False)
class PointwiseBatch:
    points: np.ndarray
    metric: np.ndarray
    frames: np.ndarray
    bivectors: np.ndarray       # (N, 6, 4, 4) contravariant, self-dual first
    operator: np.ndarray        # (N, 6, 6)
    scalar: np.ndarray
    wplus: np.ndarray           # (N, 3, 3) trace-free
    wminus: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    traceless_ricci_norm: np.ndarray

    def covariant_bivectors(self):
        g = self.metric
        return np.einsum("nik,nakl,nlj->naij", g, self.bivectors, g)


def pointwise_batch(patch, x, orientation=None):
    """Curvature operator, W+ block and its spectrum at each point of ``x``."""
    x = as_points(x)
    orient = patch.orientation if orientation is None else orientation
    cb = curvature_batch(patch, x)
    E = frame_vectors(cb.metric, orient)
    biv = selfdual_contravariant(E)
    op = operator_matrix(cb.riemann, biv)
    eye = np.eye(3)
    s12 = (cb.scalar / 12.0)[:, None, None]
    wp = op[:, :3, :3] - s12 * eye
    wm = op[:, 3:, 3:] - s12 * eye
    wp = wp - (np.trace(wp, axis1=1, axis2=2) / 3.0)[:, None, None] * eye
    wm = wm - (np.trace(wm, axis1=1, axis2=2) / 3.0)[:, None, None] * eye
    vals, vecs, _ = spectrum_batch(wp)
    ric0 = cb.ricci - 0.25 * cb.scalar[:, None, None] * cb.metric
    r0 = tensor_norm(ric0, cb.inverse)
    return PointwiseBatch(x, cb.metric, E, biv, op, cb.scalar, wp, wm, vals, vecs, r0)


def selfdual_weyl_field(patch, orientation=None):
    """Batched evaluator of the covariant 4-tensor W+_ijkl = sum_ab w_ab (w_a)_ij (w_b)_kl."""

    def field_(y):
        pw = pointwise_batch(patch, y, orientation)
        cov = pw.covariant_bivectors()[:, :3]
        return np.einsum("nab,naij,nbkl->nijkl", pw.wplus, cov, cov)

    return field_


# -- algebraic checks --------------------------------------------------------

def _lam(spectrum):
    lam = getattr(spectrum, "eigenvalues", spectrum)
    return np.asarray(lam, dtype=float)


def middle_eigenvalue_margin(lam, S):
    return lam[..., 1] + np.asarray(S) / 12.0


def half_pic_margin(lam, S):
    S = np.asarray(S, dtype=float)
    return np.minimum(S, lam[..., 0] + lam[..., 1] + S / 6.0)


def kahler_target(S):
    S = np.asarray(S, dtype=float)
    t = np.stack([S / 6.0, -S / 12.0, -S / 12.0], axis=-1)
    return np.sort(t, axis=-1)


def kahler_spectrum_residual(lam, S):
    return np.linalg.norm(lam - kahler_target(S), axis=-1)


def check_middle_eigenvalue(spectrum, S, tol=TOL_FD):
    """Margin lambda2 + S/12; passes when it is at least ``-tol``."""
    m = float(middle_eigenvalue_margin(_lam(spectrum), S))
    return Check(m, tol, m >= -tol)


def check_half_pic(spectrum, S, tol=TOL_FD):
    """Half nonnegative isotropic curvature: S >= 0 and lambda1 + lambda2 + S/6 >= 0."""
    lam = _lam(spectrum)
    pair = float(lam[0] + lam[1] + S / 6.0)
    ok = S >= -tol and pair >= -tol
    return Check(min(float(S), pair), tol, bool(ok), {"scalar": float(S), "two_sum": pair})


def check_asd(w, tol=TOL_FD):
    """Frobenius norm of the W+ block; anti-self-dual when below ``tol``."""
    m = getattr(w, "w", w)
    n = float(np.linalg.norm(m))
    return Check(n, tol, n < tol)


def _branch(S, tol):
    if S > tol:
        return "S>0: lambda1 = -S/12, lambda3 = S/6"
    if S < -tol:
        return "S<0: lambda1 = S/6, lambda3 = -S/12"
    return "S=0: lambda1 = lambda3 = 0"


def check_kahler_spectrum(spectrum, S, tol=TOL_FD):
    """Distance of the sorted spectrum from sorted (S/6, -S/12, -S/12)."""
    r = float(kahler_spectrum_residual(_lam(spectrum), S))
    return Check(r, tol, r < tol, {"branch": _branch(float(S), tol)})


def check_almost_complex(omega, g):
    """Residual |J o J + id| of J = g^-1 omega, measured in an orthonormal frame.

    ``omega`` holds covariant chart components omega_ij and should be scaled
    to |omega|^2 = 2.
    """
    omega = np.asarray(omega, dtype=float)
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    J = ginv @ omega
    A = J @ J + np.eye(4)
    return float(np.sqrt(max(np.trace(A @ ginv @ A.T @ g), 0.0)))


# -- finite-difference residuals ----------------------------------------------

def _divergence(patch, x, orientation):
    field_ = selfdual_weyl_field(patch, orientation)
    nab = covariant_derivative_batch(patch, x, field_, step=patch.outer_step)
    ginv = np.linalg.inv(metric_batch(patch, x))
    delta = -np.einsum("nim,nmijkl->njkl", ginv, nab)
    return tensor_norm(delta, ginv)


def divergence_residual(patch, p, orientation=None):
    """Norm of (delta W+)_jkl = -g^{im} (nabla W+)_{m i j k l} at ``p``."""
    x = check_inside(patch, p, depth=1)
    return float(_divergence(patch, x, orientation)[0])


@dataclass(frozen=True)
class WeitzenbockResult:
    residual: np.ndarray
    norm: float
    laplacian: np.ndarray
    rhs: np.ndarray
    divergence: float
    applicable: bool

    @property
    def note(self):
        return "" if self.applicable else "not applicable: delta W+ != 0"


def _weitzenbock(patch, x, orientation, tol):
    field_ = selfdual_weyl_field(patch, orientation)
    lap = rough_laplacian_batch(patch, x, field_)
    pw = pointwise_batch(patch, x, orientation)
    sd = pw.bivectors[:, :3]
    lap_op = 0.25 * np.einsum("naij,nijkl,nbkl->nab", sd, lap, sd)
    lap_op = 0.5 * (lap_op + lap_op.transpose(0, 2, 1))
    rhs = weitzenbock_rhs(pw.wplus, pw.scalar)
    div = _divergence(patch, x, orientation)
    out = []
    for i in range(len(x)):
        res = lap_op[i] - rhs[i]
        out.append(WeitzenbockResult(res, float(np.linalg.norm(res)), lap_op[i], rhs[i],
                                     float(div[i]), bool(div[i] <= tol)))
    return out


def weitzenbock_residual(patch, p, orientation=None, tol=TOL_FD):
    """Delta W+ (rough Laplacian, projected to Lambda+) minus the algebraic right-hand side.

    The formula presumes delta W+ = 0; when the divergence at ``p`` exceeds
    ``tol`` the result is marked not applicable.
    """
    x = check_inside(patch, p, depth=2)
    return _weitzenbock(patch, x, orientation, tol)[0]


def eigenform_field(patch, reference, orientation=None):
    """Covariant 2-form field from the distinguished W+ eigenvector.

    The top eigenvalue is used when S > 0 and the bottom one when S < 0; it
    must be isolated by more than 1e-6 at ``reference``. Forms are scaled to
    |omega|^2 = 2 and sign-aligned with the form at ``reference``.
    """
    ref = as_points(reference)
    pw = pointwise_batch(patch, ref, orientation)
    S = float(pw.scalar[0])
    lam = pw.eigenvalues[0]
    if S > 0:
        idx = 2
    elif S < 0:
        idx = 0
    else:
        raise DegenerateEigenvectorError("S = 0: no distinguished W+ eigenvalue")
    others = np.delete(lam, idx)
    if np.min(np.abs(others - lam[idx])) <= ISOLATION_GAP:
        raise DegenerateEigenvectorError(f"eigenvalue {lam[idx]:.6g} is not isolated (spectrum {lam})")

    def forms(pwb):
        cov = pwb.covariant_bivectors()[:, :3]
        v = pwb.eigenvectors[:, :, idx]
        return KAEHLER_NORM * np.einsum("na,naij->nij", v, cov)

    omega_ref = forms(pw)[0]

    def field_(y):
        w = forms(pointwise_batch(patch, y, orientation))
        sign = np.sign(np.einsum("nij,ij->n", w, omega_ref))
        sign[sign == 0] = 1.0
        return w * sign[:, None, None]

    return field_


def kahler_form_parallel(patch, p, omega_field=None, orientation=None):
    """|nabla omega| at ``p`` (g-norm of the covariant derivative of the 2-form).

    Without ``omega_field`` the distinguished W+ eigenform is propagated with
    :func:`eigenform_field`.
    """
    x = check_inside(patch, p, depth=1)
    if omega_field is None:
        omega_field = eigenform_field(patch, x, orientation)
    nab = covariant_derivative_batch(patch, x, omega_field, step=patch.outer_step)
    ginv = np.linalg.inv(metric_batch(patch, x))
    return float(tensor_norm(nab, ginv)[0])


# -- grid sweeps -------------------------------------------------------------

@dataclass
class ConditionSummary:
    """Aggregate of one condition over the sampled points.

    ``statistic`` is "min" for margins (pass when min >= -tol) and "max" for
    residuals (pass when max < tol); ``value`` is that statistic.
    """

    name: str
    statistic: str
    value: float
    tolerance: float
    passed: bool
    min: float
    max: float
    argmin: list
    argmax: list
    applicable: bool = True
    note: str = ""

    def to_dict(self):
        return {
            "statistic": self.statistic, "value": self.value, "tolerance": self.tolerance,
            "passed": self.passed, "applicable": self.applicable, "min": self.min, "max": self.max,
            "argmin": self.argmin, "argmax": self.argmax, "note": self.note,
        }


@dataclass
class ConditionReport:
    target: str
    orientation: int
    resolution: int
    n_points: int
    tolerances: Tolerances
    conditions: dict
    scalar_range: tuple
    spectrum_range: list
    classification: str
    points: np.ndarray = None
    per_point: dict = None
    caveat: str = CAVEAT

    @property
    def passed(self):
        return all(c.passed for c in self.conditions.values())


_STATISTIC = {
    "middle_eigenvalue": "min", "half_pic": "min", "asd": "max", "kahler_spectrum": "max",
    "weitzenbock": "max", "divergence": "max", "parallel_form": "max",
}


def grid_points(patch, resolution, depth=1):
    """Uniform grid over the chart box shrunk by the stencil margin, lexicographic order."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    box = patch.domain.shrink(patch.margin(depth) * 1.0001)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def budget_from_env():
    raw = os.environ.get("WEYLSCOPE_BUDGET")
    return DEFAULT_BUDGET if not raw else int(float(raw))


def _evaluate_chunk(patch, x, conditions, orientation, tol):
    pw = pointwise_batch(patch, x, orientation)
    out = {"scalar": pw.scalar, "lambda": pw.eigenvalues}
    S, lam = pw.scalar, pw.eigenvalues
    if "middle_eigenvalue" in conditions:
        out["middle_eigenvalue"] = middle_eigenvalue_margin(lam, S)
    if "half_pic" in conditions:
        out["half_pic"] = half_pic_margin(lam, S)
    if "asd" in conditions:
        out["asd"] = np.linalg.norm(pw.wplus, axis=(1, 2))
    if "kahler_spectrum" in conditions:
        out["kahler_spectrum"] = kahler_spectrum_residual(lam, S)
    if "weitzenbock" in conditions:
        res = _weitzenbock(patch, x, orientation, tol.fd)
        out["weitzenbock"] = np.array([r.norm for r in res])
        out["divergence_for_weitzenbock"] = np.array([r.divergence for r in res])
    if "divergence" in conditions:
        out["divergence"] = (out["divergence_for_weitzenbock"] if "weitzenbock" in conditions
                             else _divergence(patch, x, orientation))
    if "parallel_form" in conditions:
        vals = np.full(len(x), np.nan)
        hypothesis = kahler_spectrum_residual(lam, S) < tol.fd
        for i in np.flatnonzero(hypothesis):
            try:
                vals[i] = kahler_form_parallel(patch, x[i], orientation=orientation)
            except DegenerateEigenvectorError:
                pass
        out["parallel_form"] = vals
    return out


def grid_sweep(patch, resolution, conditions=ALGEBRAIC_CONDITIONS, tolerances=None,
               orientation=None, workers=1, budget=None, keep_points=False):
    """Evaluate ``conditions`` on a resolution^4 grid and aggregate.

    Point evaluations are independent and may run on ``workers`` threads;
    the aggregate does not depend on scheduling (results are reassembled in
    grid order and ties resolve to the lexicographically first point).
    """
    conditions = tuple(conditions)
    unknown = set(conditions) - set(CONDITIONS)
    if unknown:
        raise ValueError(f"unknown condition(s): {', '.join(sorted(unknown))}")
    tol = tolerances or Tolerances()
    orient = patch.orientation if orientation is None else int(orientation)
    budget = budget_from_env() if budget is None else budget
    n_total = resolution ** 4
    if n_total > budget:
        raise BudgetExceededError(f"{resolution}^4 = {n_total} grid points exceeds budget {budget}")
    depth = 2 if "weitzenbock" in conditions else 1
    x = grid_points(patch, resolution, depth)

    heavy = any(c in FD_CONDITIONS for c in conditions)
    chunk = 2 if heavy else 256
    chunks = [x[i:i + chunk] for i in range(0, len(x), chunk)]
    work = lambda c: _evaluate_chunk(patch, c, conditions, orient, tol)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    data = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    summaries = {}
    for name in conditions:
        v = data[name]
        stat = _STATISTIC[name]
        applicable, note = True, ""
        finite = np.isfinite(v)
        if name == "weitzenbock":
            div = data["divergence_for_weitzenbock"]
            if np.any(div > tol.fd):
                applicable, note = False, "not applicable: delta W+ != 0"
        if name == "parallel_form" and not finite.all():
            note = (f"evaluated at {int(finite.sum())} of {len(v)} points; elsewhere no isolated "
                    "Kaehler-spectrum eigenvalue")
        if not finite.any():
            note = note if name != "parallel_form" else "not applicable: no isolated Kaehler-spectrum eigenvalue"
            summaries[name] = ConditionSummary(name, stat, None, tol.fd, True, None, None,
                                               [], [], False, note)
            continue
        vv = np.where(finite, v, np.inf)
        imin = int(np.argmin(vv))
        imax = int(np.argmax(np.where(finite, v, -np.inf)))
        vmin, vmax = float(v[imin]), float(v[imax])
        value = vmin if stat == "min" else vmax
        if not applicable:
            passed = True
        elif stat == "min":
            passed = value >= -tol.fd
        else:
            passed = value < tol.fd
        summaries[name] = ConditionSummary(name, stat, value, tol.fd, bool(passed), vmin, vmax,
                                           x[imin].tolist(), x[imax].tolist(), applicable, note)

    S, lam = data["scalar"], data["lambda"]
    report = ConditionReport(
        target=patch.name, orientation=orient, resolution=resolution, n_points=len(x),
        tolerances=tol, conditions=summaries,
        scalar_range=(float(S.min()), float(S.max())),
        spectrum_range=[[float(lam[:, i].min()), float(lam[:, i].max())] for i in range(3)],
        classification=classify(S, lam, tol.fd),
    )
    if keep_points:
        report.points = x
        report.per_point = data
    return report


def classify(S, lam, tol):
    """One-line classification mirroring anti-self-dual / Kaehler-spectrum / neither."""
    S = np.asarray(S, dtype=float)
    lam = np.asarray(lam, dtype=float)
    smin, smax = float(S.min()), float(S.max())
    s_text = f"S = {_fmt(smin)}" if smax - smin <= tol else f"S in [{_fmt(smin)}, {_fmt(smax)}]"
    if np.all(np.abs(lam).max(axis=1) < tol):
        return f"anti-self-dual, {s_text}"
    if np.all(kahler_spectrum_residual(lam, S) < tol):
        side = "S>0" if smin > tol else ("S<0" if smax < -tol else "mixed sign")
        return f"Kaehler-spectrum ({side}), {s_text}"
    if np.any(middle_eigenvalue_margin(lam, S) < -tol):
        return f"neither - hypotheses fail (lambda2 < -S/12 somewhere), {s_text}"
    return f"neither - lambda2 >= -S/12 holds but spectrum is not Kaehler, {s_text}"


def _fmt(v):
    v = 0.0 if abs(v) < 5e-7 else v
    return f"{v:.6g}"
