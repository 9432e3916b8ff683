"""Berger-type conformal metric deformations on para-Kahler-Norden charts.

A chart (M^2m, F, g, V, alpha) with F^2 = I, pure metric g, parallel F and V,
unit V and (FV)(alpha) = 0 carries the deformed metric

    g^a(X, Y) = alpha (g(X, Y) + g(X, FV) g(Y, FV)).

This package evaluates the closed-form connection, curvature, Ricci data,
scalar curvature, tension and bitension fields of that deformation and checks
each of them against an independent, definition-based numerical oracle built
on exact third-order jets. See the README for the manifest format and CLI.
"""

from .chart import (
    ChartGeometry,
    ConnectionCoefficients,
    CurvatureBundle,
    christoffel_at,
    gradient_at,
    hessian_at,
    killing_potential_residual,
    laplacian_at,
    metric_at,
    riemann_at,
)
from .compare import FORMULA_IDS, ComparisonReport, compare, compare_all
from .deform import (
    DeformationContext,
    build_context,
    closed_form_connection,
    closed_form_nabla_grad,
    closed_form_ricci_operator,
    closed_form_ricci_tensor,
    closed_form_riemann,
    closed_form_scalar,
    closed_form_sectional,
    deformed_metric_components,
    killing_corollary_suite,
)
from .expr import Expression, eval_jet, eval_jet3, parse_expression, to_source
from .jets import Jet
from .manifolds import (
    BUILTIN_MANIFESTS,
    ManifoldSpec,
    MapSpec,
    load_manifold,
    load_map,
    with_alpha,
)
from .maps import (
    bitension_identity_from_deformed,
    bitension_identity_to_deformed,
    classify_biharmonic,
    energy_density,
    identity_harmonicity,
    map_harmonicity,
    tension_identity_from_deformed,
    tension_identity_to_deformed,
    tension_map_from_deformed,
    tension_map_to_deformed,
)
from .oracle import (
    oracle_bitension,
    oracle_connection,
    oracle_curvature,
    oracle_identity_tension,
    oracle_tension,
)
from .sampling import sample_points
from .structure import ValidationReport, require_valid, validate_structure

__version__ = "0.1.0"
