"""Symbolic ground truth, computed without the package."""

import functools

import numpy as np
import pytest
import sympy as sp

from weylscope import catalog, conditions

from .conftest import sample_points
from .oracles.curvature import X, symbolic_divergence_norm
from .test_tensor import _sympy_metric


def symbolic_curvature(g):
    """Christoffel, R_abcd (R_1212 > 0 on spheres), Ricci and S as sympy objects."""
    n = 4
    ginv = g.inv()
    gam = [[[sum(ginv[k, l] * (sp.diff(g[j, l], X[i]) + sp.diff(g[i, l], X[j]) - sp.diff(g[i, j], X[l]))
                 for l in range(n)) / 2 for j in range(n)] for i in range(n)] for k in range(n)]

    def R(a, b, c, d):
        up = lambda e: (sp.diff(gam[e][d][b], X[c]) - sp.diff(gam[e][c][b], X[d])
                        + sum(gam[e][c][m] * gam[m][d][b] - gam[e][d][m] * gam[m][c][b] for m in range(n)))
        return sum(g[a, e] * up(e) for e in range(n))

    return ginv, R


def test_sphere_constant_curvature_symbolic():
    x1, x2, x3, x4 = X
    g = sp.eye(4) * 4 / (1 + x1**2 + x2**2 + x3**2 + x4**2) ** 2
    ginv, R = symbolic_curvature(g)
    for a, b in [(0, 1), (0, 3), (2, 3)]:
        assert sp.simplify(R(a, b, a, b) - g[a, a] * g[b, b]) == 0
    assert sp.simplify(R(0, 1, 2, 3)) == 0
    ric00 = sum(ginv[i, i] * R(i, 0, i, 0) for i in range(4))
    assert sp.simplify(ric00 - 3 * g[0, 0]) == 0


def test_warped_scalar_curvature_symbolic():
    x1 = X[0]
    f = sp.Function("f")(x1)
    g = sp.diag(1, f**2, f**2, 1)
    ginv, R = symbolic_curvature(g)
    S = sum(ginv[i, i] * ginv[j, j] * R(i, j, i, j) for i in range(4) for j in range(4))
    closed = -4 * sp.diff(f, x1, 2) / f - 2 * (sp.diff(f, x1) / f) ** 2
    assert sp.simplify(S - closed) == 0


def test_cp2_einstein_at_rational_points():
    """Exact rational arithmetic: metric derivatives at a rational point, then Ric = 6 g."""
    g = _sympy_metric("cp2_fubini_study")
    pt = dict(zip(X, [sp.Rational(1, 3), sp.Rational(-1, 5), sp.Rational(1, 7), sp.Rational(2, 9)]))
    r4 = range(4)
    gv = g.subs(pt)
    ginv = gv.inv()
    dg = [[[sp.diff(g[i, j], X[k]).subs(pt) for j in r4] for i in r4] for k in r4]
    ddg = [[[[sp.diff(g[i, j], X[k], X[m]).subs(pt) for j in r4] for i in r4] for k in r4] for m in r4]
    low = [[[(dg[i][j][l] + dg[j][i][l] - dg[l][i][j]) / 2 for j in r4] for i in r4] for l in r4]
    gam = [[[sum(ginv[k, l] * low[l][i][j] for l in r4) for j in r4] for i in r4] for k in r4]

    def R(i, j, k, l):
        second = (ddg[j][k][i][l] + ddg[i][l][j][k] - ddg[i][k][j][l] - ddg[j][l][i][k]) / 2
        quad = sum(gv[m, n] * (gam[m][j][k] * gam[n][i][l] - gam[m][i][k] * gam[n][j][l]) for m in r4 for n in r4)
        return second + quad

    for j, l in [(0, 0), (0, 2), (1, 3), (3, 3), (1, 2)]:
        ric = sum(ginv[i, k] * R(i, j, k, l) for i in r4 for k in r4)
        assert sp.simplify(ric - 6 * gv[j, l]) == 0


@functools.lru_cache(maxsize=None)
def _warped_divergence():
    return symbolic_divergence_norm(_sympy_metric("warped_probe"))


def test_warped_divergence_matches_symbolic():
    norm, S = _warped_divergence()
    patch = catalog.load("warped_probe").patch
    for p in sample_points(patch, 4, seed=1):
        ref = float(norm(*p))
        assert ref > 1e-2
        assert conditions.divergence_residual(patch, p) == pytest.approx(ref, rel=1e-6)
        assert float(S(*p)) == pytest.approx(catalog.warped_scalar_curvature(p[0]), abs=1e-12)


def test_warped_divergence_lower_bound_over_domain():
    """The detector floor: |delta W+| stays above 1e-2 on the whole sampled chart."""
    norm, _ = _warped_divergence()
    patch = catalog.load("warped_probe").patch
    box = patch.domain.shrink(patch.margin(1))
    x1 = np.linspace(box.lower[0], box.upper[0], 201)
    vals = np.array([float(norm(a, 0.5, 0.5, 0.5)) for a in x1])
    assert vals.min() > 1e-2
