import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weylscope import _kernels
from weylscope._kernels import _pure

BACKENDS = ["python"] + (["compiled"] if "compiled" in _kernels.BACKENDS else [])

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@pytest.mark.parametrize("backend", BACKENDS)
def test_jacobi_matches_lapack(backend, rng):
    a = sym(rng.normal(size=(500, 3, 3)))
    vals, vecs, sweeps = _kernels.jacobi_eigh3(a, backend=backend)
    assert np.all(sweeps >= 0)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(a), atol=1e-12)
    recon = np.einsum("nij,nj,nkj->nik", vecs, vals, vecs)
    np.testing.assert_allclose(recon, a, atol=1e-12)
    np.testing.assert_allclose(np.einsum("nji,njk->nik", vecs, vecs), np.broadcast_to(np.eye(3), a.shape), atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
@given(arrays(np.float64, (3, 3), elements=finite))
def test_jacobi_property(backend, a):
    a = sym(a)
    vals, vecs, sweeps = _kernels.jacobi_eigh3(a[None], backend=backend)
    scale = max(1.0, np.abs(a).max())
    assert sweeps[0] >= 0
    assert np.all(np.diff(vals[0]) >= 0)
    np.testing.assert_allclose(vals[0], np.linalg.eigvalsh(a), atol=1e-12 * scale)
    np.testing.assert_allclose(vecs[0] @ np.diag(vals[0]) @ vecs[0].T, a, atol=1e-11 * scale)


@pytest.mark.parametrize("backend", BACKENDS)
def test_jacobi_degenerate_and_zero(backend, rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a = q @ np.diag([4.0, -2.0, -2.0]) @ q.T
    vals, _, _ = _kernels.jacobi_eigh3(np.stack([a, np.zeros((3, 3))]), backend=backend)
    np.testing.assert_allclose(vals[0], [-2, -2, 4], atol=1e-13)
    np.testing.assert_array_equal(vals[1], 0.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_eigenvector_sign_convention(backend, rng):
    a = sym(rng.normal(size=(50, 3, 3)))
    _, vecs, _ = _kernels.jacobi_eigh3(a, backend=backend)
    for v in np.moveaxis(vecs, 2, 1).reshape(-1, 3):
        lead = v[np.abs(v) > 1e-10][0]
        assert lead > 0


def test_non_convergence_flagged():
    a = sym(np.random.default_rng(0).normal(size=(4, 3, 3)))
    _, _, sweeps = _pure.jacobi_sweeps3(a.copy(), tol=0.0, max_sweeps=1)
    assert np.all(sweeps == -1)


@pytest.mark.skipif("compiled" not in _kernels.BACKENDS, reason="extension not built")
def test_backends_agree(rng):
    n = 64
    g = sym(rng.normal(size=(n, 4, 4))) + 6 * np.eye(4)
    gamma = rng.normal(size=(n, 4, 4, 4))
    gamma = 0.5 * (gamma + gamma.transpose(0, 1, 3, 2))
    dgamma = rng.normal(size=(n, 4, 4, 4, 4))
    r_py = _kernels.riemann_lower(g, gamma, dgamma, backend="python")
    r_c = _kernels.riemann_lower(g, gamma, dgamma, backend="compiled")
    np.testing.assert_allclose(r_c, r_py, rtol=1e-13, atol=1e-13)
    a = sym(rng.normal(size=(n, 3, 3)))
    v_py = _kernels.jacobi_eigh3(a, backend="python")
    v_c = _kernels.jacobi_eigh3(a, backend="compiled")
    np.testing.assert_allclose(v_c[0], v_py[0], atol=1e-14)
    np.testing.assert_allclose(np.abs(v_c[1]), np.abs(v_py[1]), atol=1e-12)


def test_riemann_lower_antisymmetry(rng):
    g = np.broadcast_to(np.eye(4), (3, 4, 4)).copy()
    gamma = np.zeros((3, 4, 4, 4))
    dgamma = rng.normal(size=(3, 4, 4, 4, 4))
    r = _kernels.riemann_lower(g, gamma, dgamma, backend="python")
    np.testing.assert_allclose(r, -r.transpose(0, 2, 1, 3, 4), atol=1e-14)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def test_pure_python_fallback_selected_by_env():
    env = dict(os.environ, WEYLSCOPE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from weylscope import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
