"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension ``_core`` is used when it imports; setting
``WEYLSCOPE_PURE_PYTHON=1`` forces the numpy versions in ``_pure``.
"""

import os

import numpy as np

from . import _pure

try:
    if os.environ.get("WEYLSCOPE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _core
except ImportError:
    _core = None

BACKENDS = {"python": _pure}
if _core is not None:
    BACKENDS["compiled"] = _core

BACKEND = "compiled" if _core is not None else "python"
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


def jacobi_eigh3(a, tol=1e-14, max_sweeps=50, backend=None):
    """Sorted eigen-decomposition of a batch of symmetric 3x3 matrices.

    Eigenvalues ascend; each eigenvector's first component above roundoff is
    made positive so the output is deterministic.

    Returns
    -------
    vals : (N, 3)
    vecs : (N, 3, 3), eigenvectors as columns
    sweeps : (N,) int, -1 where the iteration did not converge
    """
    a = np.asarray(a, dtype=np.float64)
    diag, vecs, sweeps = get_backend(backend).jacobi_sweeps3(a, tol, max_sweeps)
    order = np.argsort(diag, axis=1, kind="stable")
    vals = np.take_along_axis(diag, order, axis=1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    big = np.abs(vecs) > 1e-10
    first = np.argmax(big, axis=1)
    lead = np.take_along_axis(vecs, first[:, None, :], axis=1)[:, 0, :]
    vecs = vecs * np.where(lead < 0.0, -1.0, 1.0)[:, None, :]
    return vals, vecs, np.asarray(sweeps)


def riemann_lower(g, gamma, dgamma, backend=None):
    """Batched lowered Riemann tensor; see ``_pure.riemann_lower``."""
    return get_backend(backend).riemann_lower(g, gamma, dgamma)
