import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weylscope import catalog, decomp
from weylscope.errors import FrameMismatchError, TraceViolationError
from weylscope.frames import gram_schmidt_frame, selfdual_basis, selfdual_contravariant
from weylscope.tensor import riemann

from .conftest import sample_points


def operator_at(name, p):
    patch = catalog.load(name).patch
    cd = riemann(patch, p)
    return cd, decomp.curvature_operator(cd, selfdual_basis(cd.frame))


def traceless(a):
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    return a - (np.trace(a, axis1=-2, axis2=-1)[..., None, None] / 3.0) * np.eye(3)


sym3 = arrays(np.float64, (3, 3), elements=st.floats(-10, 10)).map(lambda a: 0.5 * (a + a.T))
scalars = st.floats(-50, 50)


def test_operator_flat_and_sphere():
    _, op = operator_at("t4_flat", [0.5] * 4)
    np.testing.assert_array_equal(op.matrix, np.zeros((6, 6)))
    _, op = operator_at("s4_round", [0.1, -0.2, 0.3, 0.05])
    np.testing.assert_allclose(op.matrix, np.eye(6), atol=1e-9)


def test_operator_cp2_blocks():
    cd, op = operator_at("cp2_fubini_study", [0.2, 0.1, -0.3, 0.4])
    np.testing.assert_allclose(np.linalg.eigvalsh(op.A), [0, 0, 6], atol=1e-9)
    np.testing.assert_allclose(op.B, 0.0, atol=1e-9)
    np.testing.assert_allclose(op.C, 2 * np.eye(3), atol=1e-9)
    wp = decomp.extract_weyl(op, cd.scalar)
    np.testing.assert_allclose(decomp.spectrum(wp).eigenvalues, [-2, -2, 4], atol=1e-9)
    wm = decomp.extract_weyl(op, cd.scalar, decomp.ANTI_SELF_DUAL)
    assert wm.norm < 1e-9


def test_s2xs2_and_ch2_spectra():
    cd, op = operator_at("s2xs2", [1.0, 2.0, 1.3, 0.4])
    sp_ = decomp.spectrum(decomp.extract_weyl(op, cd.scalar))
    np.testing.assert_allclose(sp_.eigenvalues, [-1 / 3, -1 / 3, 2 / 3], atol=1e-9)
    assert sp_.degenerate == (True, True, False)
    cd, op = operator_at("ch2_complex_hyperbolic", [0.1, 0.2, -0.1, 0.0])
    np.testing.assert_allclose(decomp.spectrum(decomp.extract_weyl(op, cd.scalar)).eigenvalues, [-4, 2, 2], atol=1e-9)


def test_frame_mismatch():
    cd, _ = operator_at("cp2_fubini_study", [0.2, 0.1, -0.3, 0.4])
    other = gram_schmidt_frame(np.eye(4))
    with pytest.raises(FrameMismatchError):
        decomp.curvature_operator(cd, selfdual_basis(other))


def test_trace_violation():
    cd, op = operator_at("cp2_fubini_study", [0.2, 0.1, -0.3, 0.4])
    with pytest.raises(TraceViolationError):
        decomp.extract_weyl(op, cd.scalar + 1.0)
    with pytest.raises(ValueError):
        decomp.extract_weyl(op, cd.scalar, side="both")


@pytest.mark.parametrize("name", catalog.NAMES)
def test_gauge_invariance(name, rng):
    """Random SO(4) rotations of the frame leave the W+ spectrum unchanged; reflections swap W+ and W-."""
    patch = catalog.load(name).patch
    x = sample_points(patch, 1, seed=11)[0]
    cd = riemann(patch, x)
    E = cd.frame.vectors

    def blocks(frame):
        m = decomp.operator_matrix(cd.riemann[None], selfdual_contravariant(frame)[None])[0]
        s = cd.scalar / 12.0
        return [np.linalg.eigvalsh(b - s * np.eye(3)) for b in (m[:3, :3], m[3:, 3:])]

    ref_plus, ref_minus = blocks(E)
    for _ in range(5):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        plus, minus = blocks(q @ E)
        np.testing.assert_allclose(plus, ref_plus, atol=1e-9)
        np.testing.assert_allclose(minus, ref_minus, atol=1e-9)
        r = np.diag([1.0, 1.0, 1.0, -1.0]) @ q
        plus, minus = blocks(r @ E)
        np.testing.assert_allclose(plus, ref_minus, atol=1e-9)
        np.testing.assert_allclose(minus, ref_plus, atol=1e-9)


def test_spectrum_examples(rng):
    assert np.array_equal(decomp.spectrum(np.zeros((3, 3))).eigenvalues, np.zeros(3))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    s = decomp.spectrum(q @ np.diag([4.0, -2, -2]) @ q.T)
    np.testing.assert_allclose(s.eigenvalues, [-2, -2, 4], atol=1e-13)
    assert (s.lambda1, s.lambda3) == pytest.approx((-2, 4))
    assert s.isolated(2, 1e-6) and not s.isolated(0, 1e-6)


@given(sym3)
def test_spectrum_property(w):
    s = decomp.spectrum(w)
    np.testing.assert_allclose(s.eigenvalues, np.linalg.eigvalsh(w), atol=1e-11 * max(1, np.abs(w).max()))
    v = s.eigenvectors
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)


def test_adjoint_examples():
    np.testing.assert_allclose(decomp.adjoint_matrix(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(decomp.adjoint_matrix(np.diag([1.0, 2, 3])), np.diag([6.0, 3, 2]))
    np.testing.assert_allclose(decomp.adjoint_matrix(np.diag([4.0, -2, -2])), np.diag([4.0, -8, -8]))


@given(sym3)
def test_adjoint_is_cofactor_matrix(w):
    adj = decomp.adjoint_matrix(w)
    scale = max(1.0, np.abs(w).max()) ** 3
    np.testing.assert_allclose(adj @ w, np.linalg.det(w) * np.eye(3), atol=1e-10 * scale)
    np.testing.assert_allclose(adj, adj.T, atol=1e-12 * scale)


def test_weitzenbock_rhs_examples():
    assert np.array_equal(decomp.weitzenbock_rhs(np.zeros((3, 3)), 7.0), np.zeros((3, 3)))
    np.testing.assert_allclose(decomp.weitzenbock_rhs(np.diag([4.0, -2, -2]), 24.0), 0.0, atol=1e-13)
    with pytest.raises(TraceViolationError):
        decomp.weitzenbock_rhs(np.eye(3), 1.0)
    with pytest.raises(ValueError):
        decomp.weitzenbock_rhs(np.zeros((3, 3)), 1.0, form="third")


@given(sym3, scalars)
def test_weitzenbock_forms_agree(w, S):
    w = traceless(w)
    a = decomp.weitzenbock_rhs(w, S, "first")
    b = decomp.weitzenbock_rhs(w, S, "second")
    scale = max(1.0, abs(S)) * max(1.0, np.abs(w).max()) ** 2
    np.testing.assert_allclose(a, b, atol=1e-12 * scale)


def test_weitzenbock_rhs_diagonal_in_eigenbasis(rng):
    """In the eigenbasis, entry i is S/2 l_i - 2 l_i^2 - 4 (product of the other two)."""
    lam = np.array([-1.5, 0.25, 1.25])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    rhs = decomp.weitzenbock_rhs(q @ np.diag(lam) @ q.T, 6.0)
    d = q.T @ rhs @ q
    other = np.array([lam[1] * lam[2], lam[0] * lam[2], lam[0] * lam[1]])
    np.testing.assert_allclose(d, np.diag(3.0 * lam - 2 * lam**2 - 4 * other), atol=1e-13)


def test_identity_examples():
    assert decomp.eigenvalue_inequality_identity([0, 0, 0], 5.0) == 0
    assert decomp.eigenvalue_inequality_identity([-2, -2, 4], 24.0) == 0
    with pytest.raises(TraceViolationError):
        decomp.eigenvalue_inequality_identity([1, 0, 0], 1.0)
    for S in (-24.0, 3.0, 24.0):
        for lam in (S / 6, -S / 12):
            assert decomp.root_factorization(lam, S) == pytest.approx((0, 0), abs=1e-12)
    u, f = decomp.root_factorization(1.0, 24.0)
    assert (u, f) == pytest.approx((18.0, 18.0))
    u3, f3 = decomp.root_factorization(1.0, 24.0, which="lambda3")
    assert (u3, f3) == pytest.approx((18.0, 18.0))
    with pytest.raises(ValueError):
        decomp.root_factorization(1.0, 1.0, which="lambda2")


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), scalars,
       st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
def test_laplacian_terms_trace_level(vals, S, a, b, c):
    """The three eigenvalue right-hand sides sum to the Laplacian of the trace, i.e. zero."""
    lam = np.sort(np.array(vals) - np.mean(vals))
    lam[2] = -lam[0] - lam[1]
    d = decomp.eigenvalue_laplacian_terms(lam, S, a, b, c)
    scale = max(1.0, abs(S)) * max(1.0, np.abs(lam).max()) ** 2 * max(1.0, a + b + c)
    assert abs(d.sum()) < 1e-12 * scale
    assert abs(decomp.refined_gap_identity(lam, S, a, b, c)) < 1e-12 * scale


def test_round_trip_decomposition(rng):
    S, E, wp, wm = decomp.random_pieces(rng, 1000)
    m = decomp.assemble_operator(S, E, wp, wm)
    np.testing.assert_allclose(m, np.swapaxes(m, -1, -2), atol=1e-14)
    S2, E2, wp2, wm2 = decomp.decompose_operator(m)
    rebuilt = decomp.assemble_operator(S2, E2, wp2, wm2)
    assert np.abs(rebuilt - m).max() < 1e-12
    assert np.abs(S2 - S).max() < 1e-12 and np.abs(E2 - E).max() < 1e-12
    assert np.abs(wp2 - wp).max() < 1e-12 and np.abs(wm2 - wm).max() < 1e-12


def test_tensor_operator_round_trip(rng):
    m = rng.normal(size=(6, 6))
    m = 0.5 * (m + m.T)
    np.testing.assert_allclose(decomp.tensor_to_operator(decomp.operator_to_tensor(m)), m, atol=1e-14)
