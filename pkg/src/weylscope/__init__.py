"""weylscope: curvature decomposition of Riemannian 4-manifolds on a chart.

Finite-difference curvature, the Lambda+ / Lambda- splitting of the curvature
operator, the self-dual Weyl spectrum, and checks of the associated
pointwise identities and inequalities.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .tensor import ChartDomain, ChartPoint, MetricPatch, christoffel, covariant_derivative, eval_metric, riemann, rough_laplacian  # noqa: F401
from .frames import gram_schmidt_frame, hodge_star, selfdual_basis  # noqa: F401
from .decomp import (  # noqa: F401
    adjoint_matrix,
    curvature_operator,
    eigenvalue_inequality_identity,
    extract_weyl,
    root_factorization,
    spectrum,
    weitzenbock_rhs,
)
from .parser import parse_definition, parse_metric  # noqa: F401
