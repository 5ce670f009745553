"""Reference metrics with closed-form curvature, and the user-metric loader.

Each entry carries its chart, an evaluator with analytic first derivatives,
ground truth (scalar curvature, Einstein constant, sorted W+ spectrum,
Kaehler flag) with a provenance note per number, and an equivalent source
text in the metric-definition language.
"""

import functools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericalInstabilityError, UnknownEntryError
from .parser import parse_metric
from .tensor import ChartDomain, MetricPatch

SELF_TEST_POINTS = 20
SELF_TEST_TOL = 1e-5


def _conformally_flat(sign):
    """g = 4 / (1 + sign |x|^2)^2 * delta: unit S^4 (sign=+1) or H^4 (sign=-1)."""

    def metric(x):
        q = 1.0 + sign * np.einsum("ni,ni->n", x, x)
        return (4.0 / q ** 2)[:, None, None] * np.eye(4)

    def dmetric(x):
        q = 1.0 + sign * np.einsum("ni,ni->n", x, x)
        dphi = -16.0 * sign / q ** 3
        return np.einsum("n,nk,ij->nkij", dphi, x, np.eye(4))

    return metric, dmetric


def _kahler_ball(sign):
    """Fubini-Study (sign=+1) or complex-hyperbolic (sign=-1) metric, z = (x1 + i x2, x3 + i x4).

    Normalized to holomorphic sectional curvature 4 * sign, i.e. Ric = 6 sign g.
    """

    def parts(x):
        x1, x2, x3, x4 = x.T
        n = len(x)
        q = 1.0 + sign * (x1 ** 2 + x2 ** 2 + x3 ** 2 + x4 ** 2)
        al = x1 * x3 + x2 * x4
        be = x1 * x4 - x2 * x3
        N = np.zeros((n, 4, 4))
        N[:, 0, 0] = N[:, 1, 1] = 1.0 + sign * (x3 ** 2 + x4 ** 2)
        N[:, 2, 2] = N[:, 3, 3] = 1.0 + sign * (x1 ** 2 + x2 ** 2)
        N[:, 0, 2] = N[:, 2, 0] = N[:, 1, 3] = N[:, 3, 1] = -sign * al
        N[:, 0, 3] = N[:, 3, 0] = -sign * be
        N[:, 1, 2] = N[:, 2, 1] = sign * be
        dN = np.zeros((n, 4, 4, 4))
        for k, xk in ((2, x3), (3, x4)):
            dN[:, k, 0, 0] = dN[:, k, 1, 1] = 2.0 * sign * xk
        for k, xk in ((0, x1), (1, x2)):
            dN[:, k, 2, 2] = dN[:, k, 3, 3] = 2.0 * sign * xk
        dal = (x3, x4, x1, x2)
        dbe = (x4, -x3, -x2, x1)
        for k in range(4):
            dN[:, k, 0, 2] = dN[:, k, 2, 0] = dN[:, k, 1, 3] = dN[:, k, 3, 1] = -sign * dal[k]
            dN[:, k, 0, 3] = dN[:, k, 3, 0] = -sign * dbe[k]
            dN[:, k, 1, 2] = dN[:, k, 2, 1] = sign * dbe[k]
        return q, N, dN

    def metric(x):
        q, N, _ = parts(x)
        return N / (q ** 2)[:, None, None]

    def dmetric(x):
        q, N, dN = parts(x)
        dq = 2.0 * sign * x
        return dN / (q ** 2)[:, None, None, None] - 2.0 * np.einsum("nk,nij->nkij", dq, N) / (q ** 3)[:, None, None, None]

    return metric, dmetric


def _s2xs2():
    def metric(x):
        g = np.zeros((len(x), 4, 4))
        g[:, 0, 0] = g[:, 2, 2] = 1.0
        g[:, 1, 1] = np.sin(x[:, 0]) ** 2
        g[:, 3, 3] = np.sin(x[:, 2]) ** 2
        return g

    def dmetric(x):
        d = np.zeros((len(x), 4, 4, 4))
        d[:, 0, 1, 1] = np.sin(2.0 * x[:, 0])
        d[:, 2, 3, 3] = np.sin(2.0 * x[:, 2])
        return d

    return metric, dmetric


def _flat():
    return (lambda x: np.broadcast_to(np.eye(4), (len(x), 4, 4)).copy(),
            lambda x: np.zeros((len(x), 4, 4, 4)))


WARP_AMPLITUDE = 0.1


def _warped():
    """dx1^2 + f(x1)^2 (dx2^2 + dx3^2) + dx4^2 with f = 1 + 0.1 sin(x1)."""

    def metric(x):
        f = 1.0 + WARP_AMPLITUDE * np.sin(x[:, 0])
        g = np.zeros((len(x), 4, 4))
        g[:, 0, 0] = g[:, 3, 3] = 1.0
        g[:, 1, 1] = g[:, 2, 2] = f ** 2
        return g

    def dmetric(x):
        f = 1.0 + WARP_AMPLITUDE * np.sin(x[:, 0])
        d = np.zeros((len(x), 4, 4, 4))
        d[:, 0, 1, 1] = d[:, 0, 2, 2] = 2.0 * f * WARP_AMPLITUDE * np.cos(x[:, 0])
        return d

    return metric, dmetric


def warped_scalar_curvature(x1):
    """Closed-form S = -4 f''/f - 2 (f'/f)^2 of the warped probe."""
    f = 1.0 + WARP_AMPLITUDE * np.sin(x1)
    fp = WARP_AMPLITUDE * np.cos(x1)
    fpp = -WARP_AMPLITUDE * np.sin(x1)
    return -4.0 * fpp / f - 2.0 * (fp / f) ** 2


def warped_spectrum(x1):
    """Sorted W+ eigenvalues of the warped probe: (-t, t/2, t/2) up to ordering,
    with t = ((f'/f)^2 - f''/f) / 3."""
    f = 1.0 + WARP_AMPLITUDE * np.sin(x1)
    fp = WARP_AMPLITUDE * np.cos(x1)
    fpp = -WARP_AMPLITUDE * np.sin(x1)
    t = ((fp / f) ** 2 - fpp / f) / 3.0
    return np.sort(np.stack([-t, 0.5 * t, 0.5 * t], axis=-1), axis=-1)


_BOX = lambda a, b: ((a,) * 4, (b,) * 4)

SOURCES = {
    "t4_flat": """\
# flat torus, one fundamental domain
domain = [0, 1]x[0, 1]x[0, 1]x[0, 1]
g11 = 1; g22 = 1; g33 = 1; g44 = 1
""",
    "s4_round": """\
# unit round four-sphere, stereographic chart from the north pole
domain = [-1, 1]x[-1, 1]x[-1, 1]x[-1, 1]
q = 1 + x1^2 + x2^2 + x3^2 + x4^2
g11 = 4/q^2; g22 = 4/q^2; g33 = 4/q^2; g44 = 4/q^2
""",
    "h4_hyperbolic": """\
# hyperbolic four-space, Poincare ball
domain = [-0.45, 0.45]x[-0.45, 0.45]x[-0.45, 0.45]x[-0.45, 0.45]
q = 1 - (x1^2 + x2^2 + x3^2 + x4^2)
g11 = 4/q^2; g22 = 4/q^2; g33 = 4/q^2; g44 = 4/q^2
""",
    "cp2_fubini_study": """\
# Fubini-Study on CP^2, affine chart z1 = x1 + i x2, z2 = x3 + i x4, Ric = 6 g
domain = [-1, 1]x[-1, 1]x[-1, 1]x[-1, 1]
q = 1 + x1^2 + x2^2 + x3^2 + x4^2
al = x1*x3 + x2*x4
be = x1*x4 - x2*x3
g11 = (1 + x3^2 + x4^2)/q^2
g22 = (1 + x3^2 + x4^2)/q^2
g33 = (1 + x1^2 + x2^2)/q^2
g44 = (1 + x1^2 + x2^2)/q^2
g13 = -al/q^2
g24 = -al/q^2
g14 = -be/q^2
g23 = be/q^2
""",
    "ch2_complex_hyperbolic": """\
# Bergman metric on the unit ball of C^2, Ric = -6 g
domain = [-0.45, 0.45]x[-0.45, 0.45]x[-0.45, 0.45]x[-0.45, 0.45]
q = 1 - (x1^2 + x2^2 + x3^2 + x4^2)
al = x1*x3 + x2*x4
be = x1*x4 - x2*x3
g11 = (1 - x3^2 - x4^2)/q^2
g22 = (1 - x3^2 - x4^2)/q^2
g33 = (1 - x1^2 - x2^2)/q^2
g44 = (1 - x1^2 - x2^2)/q^2
g13 = al/q^2
g24 = al/q^2
g14 = be/q^2
g23 = -be/q^2
""",
    "s2xs2": """\
# product of two unit two-spheres, poles excluded
domain = [0.2, pi - 0.2]x[0, 2*pi]x[0.2, pi - 0.2]x[0, 2*pi]
g11 = 1
g22 = sin(x1)^2
g33 = 1
g44 = sin(x3)^2
""",
    "warped_probe": """\
# non-Einstein negative control: dx1^2 + f^2 (dx2^2 + dx3^2) + dx4^2
domain = [-1, 1]x[0, 1]x[0, 1]x[0, 1]
f = 1 + 0.1*sin(x1)
g11 = 1
g22 = f^2
g33 = f^2
g44 = 1
""",
}


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    """A reference metric with ground truth.

    ``scalar_curvature`` and ``spectrum`` are either constants or callables of
    the chart points (N, 4); ``einstein_constant`` is ``None`` for a
    non-Einstein metric.
    """

    name: str
    description: str
    patch: MetricPatch
    scalar_curvature: object
    einstein_constant: Optional[float]
    spectrum: object
    kahler: bool
    orientation_note: str
    provenance: dict = field(default_factory=dict)
    source: str = ""

    @property
    def einstein(self):
        return self.einstein_constant is not None

    def expected_scalar(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.scalar_curvature
        return np.asarray(s(x), dtype=float) if callable(s) else np.full(len(x), float(s))

    def expected_spectrum(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        sp = self.spectrum
        if callable(sp):
            return np.asarray(sp(x), dtype=float)
        return np.broadcast_to(np.asarray(sp, dtype=float), (len(x), 3))

    def ground_truth(self):
        """JSON-ready summary of the ground-truth record."""
        s = self.scalar_curvature
        sp = self.spectrum
        return {
            "scalar_curvature": "x-dependent (closed form)" if callable(s) else float(s),
            "einstein_constant": self.einstein_constant if self.einstein else "not Einstein",
            "wplus_spectrum": "x-dependent (closed form)" if callable(sp) else [float(v) for v in sp],
            "kahler": self.kahler,
            "orientation": self.orientation_note,
            "provenance": dict(self.provenance),
        }


def _entry(name, description, domain, pair, S, einstein, spectrum, kahler, note, provenance):
    metric, dmetric = pair
    lo, hi = domain
    patch = MetricPatch(
        domain=ChartDomain(lo, hi, name),
        metric=metric,
        dmetric=dmetric,
        name=name,
        einstein_constant=einstein,
        scalar_curvature=None if callable(S) else float(S),
        orientation=1,
        source=SOURCES[name],
    )
    return CatalogEntry(name, description, patch, S, einstein, spectrum, kahler, note, provenance, SOURCES[name])


_HALF_PI_OFF = (0.2, 0.0, 0.2, 0.0), (np.pi - 0.2, 2 * np.pi, np.pi - 0.2, 2 * np.pi)

_BUILDERS = {
    "t4_flat": lambda: _entry(
        "t4_flat", "flat four-torus (one fundamental domain)", _BOX(0.0, 1.0), _flat(),
        0.0, 0.0, (0.0, 0.0, 0.0), True, "chart order; flat, so W+ = W- = 0",
        {"S": "TRIVIAL: constant metric", "spectrum": "TRIVIAL: R = 0", "einstein": "TRIVIAL"}),
    "s4_round": lambda: _entry(
        "s4_round", "unit round S^4, stereographic chart", _BOX(-1.0, 1.0), _conformally_flat(1.0),
        12.0, 3.0, (0.0, 0.0, 0.0), False, "chart order; conformally flat, so W+ = 0",
        {"S": "DERIVED: constant curvature 1, S = n(n-1)", "spectrum": "DERIVED: conformally flat",
         "einstein": "DERIVED: Ric = (n-1) g"}),
    "h4_hyperbolic": lambda: _entry(
        "h4_hyperbolic", "hyperbolic H^4, Poincare ball", _BOX(-0.45, 0.45), _conformally_flat(-1.0),
        -12.0, -3.0, (0.0, 0.0, 0.0), False, "chart order; conformally flat, so W+ = 0",
        {"S": "DERIVED: constant curvature -1", "spectrum": "DERIVED: conformally flat",
         "einstein": "DERIVED: Ric = -(n-1) g"}),
    "cp2_fubini_study": lambda: _entry(
        "cp2_fubini_study", "Fubini-Study CP^2, affine chart, Ric = 6 g", _BOX(-1.0, 1.0), _kahler_ball(1.0),
        24.0, 6.0, (-2.0, -2.0, 4.0), True, "complex orientation (x1 + i x2, x3 + i x4); Kaehler form self-dual",
        {"S": "DERIVED: Ric = 2(n+1) g for holomorphic sectional curvature 4",
         "spectrum": "LITERATURE: Kaehler W+ = diag(S/6, -S/12, -S/12) with S = 24",
         "einstein": "DERIVED: symbolic oracle"}),
    "ch2_complex_hyperbolic": lambda: _entry(
        "ch2_complex_hyperbolic", "complex hyperbolic CH^2, Bergman ball, Ric = -6 g", _BOX(-0.45, 0.45),
        _kahler_ball(-1.0), -24.0, -6.0, (-4.0, 2.0, 2.0), True,
        "complex orientation; Kaehler form self-dual",
        {"S": "DERIVED: holomorphic sectional curvature -4",
         "spectrum": "LITERATURE: Kaehler W+ = diag(S/6, -S/12, -S/12) with S = -24",
         "einstein": "DERIVED: symbolic oracle"}),
    "s2xs2": lambda: _entry(
        "s2xs2", "product of two unit spheres (theta1, phi1, theta2, phi2)", _HALF_PI_OFF, _s2xs2(),
        4.0, 1.0, (-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0), True,
        "chart order; vol1 + vol2 is self-dual",
        {"S": "DERIVED: 2 + 2", "spectrum": "DERIVED: product curvature; Kaehler shape with S = 4",
         "einstein": "DERIVED: Ric = g"}),
    "warped_probe": lambda: _entry(
        "warped_probe", "non-Einstein warped product, f = 1 + 0.1 sin(x1)",
        ((-1.0, 0.0, 0.0, 0.0), (1.0, 1.0, 1.0, 1.0)), _warped(),
        lambda x: warped_scalar_curvature(x[:, 0]), None, lambda x: warped_spectrum(x[:, 0]), False,
        "chart order",
        {"S": "DERIVED: warped-product formula -4 f''/f - 2 (f'/f)^2",
         "spectrum": "DERIVED: symbolic oracle on the product N^3 x R",
         "einstein": "DERIVED: not Einstein (f non-constant)"}),
}

NAMES = tuple(_BUILDERS)


def self_test(entry, n_points=SELF_TEST_POINTS, tol=SELF_TEST_TOL, seed=0):
    """Compare engine S and sorted W+ spectrum with ground truth at random points.

    Returns the maximum absolute deviations; raises NumericalInstabilityError
    when either exceeds ``tol``.
    """
    from .conditions import pointwise_batch

    patch = entry.patch
    rng = np.random.default_rng(seed)
    box = patch.domain.shrink(patch.margin(1))
    x = rng.uniform(box.lower, box.upper, size=(n_points, 4))
    pw = pointwise_batch(patch, x)
    ds = float(np.max(np.abs(pw.scalar - entry.expected_scalar(x))))
    dl = float(np.max(np.abs(pw.eigenvalues - entry.expected_spectrum(x))))
    if ds > tol or dl > tol:
        raise NumericalInstabilityError(
            f"catalog self-test failed for {entry.name}: |dS| = {ds:.3e}, |dspectrum| = {dl:.3e} (tol {tol:g})"
        )
    return {"scalar": ds, "spectrum": dl}


@functools.lru_cache(maxsize=None)
def _load_checked(name):
    entry = _BUILDERS[name]()
    self_test(entry)
    return entry


def load(name, verify=True):
    """Catalog entry ``name``; the load-time self-test runs once per process."""
    if name not in _BUILDERS:
        raise UnknownEntryError(f"unknown catalog entry {name!r}; known: {', '.join(NAMES)}")
    return _load_checked(name) if verify else _BUILDERS[name]()


def source_patch(name):
    """The entry re-expressed through the metric-definition language (finite-difference derivatives)."""
    entry = load(name, verify=False)
    return parse_metric(entry.source, name=f"{name}[source]",
                        einstein_constant=entry.einstein_constant,
                        scalar_curvature=entry.patch.scalar_curvature)
