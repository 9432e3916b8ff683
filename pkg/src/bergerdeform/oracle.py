"""Definition-based oracle for every closed form in this package.

The oracle assembles the deformed metric components symbolically (as exact
jets), differentiates them with the same coordinate formulas used for any
metric, and builds tensions and bitensions straight from their definitions.
It shares nothing with the closed forms except the chart description and the
jet engine; in particular this module must not import
:mod:`bergerdeform.deform` or :mod:`bergerdeform.maps` (the comparison layer
imports both sides).
"""

from __future__ import annotations

import numpy as np

from .chart import (
    ChartGeometry,
    ConnectionCoefficients,
    CurvatureBundle,
    gradient_jets,
)
from .manifolds import ManifoldSpec, MapSpec
from .mapgeom import MapGeometry, base_tension

__all__ = [
    "oracle_connection",
    "oracle_curvature",
    "oracle_nabla_grad",
    "oracle_sectional",
    "oracle_identity_tension",
    "oracle_tension",
    "oracle_bitension",
    "identity_bitension_from_geometries",
]


def oracle_connection(spec: ManifoldSpec, point, which: str = "deformed") -> ConnectionCoefficients:
    """Christoffel symbols of the selected metric, from its assembled components."""
    geom = ChartGeometry(spec, point, which)
    return ConnectionCoefficients(gamma=geom.gamma[0], which_metric=which)


def oracle_curvature(spec: ManifoldSpec, point) -> CurvatureBundle:
    """Curvature bundle of the deformed metric at one point."""
    return ChartGeometry(spec, point, "deformed").bundle(0)


def oracle_nabla_grad(base_geom: ChartGeometry, deformed_geom: ChartGeometry) -> np.ndarray:
    """Deformed covariant derivative of the base gradient of alpha.

    Returns [..., k, i] = (nabla^a_i grad alpha)^k, computed by
    differentiating the gradient field with the deformed Christoffels.
    """
    n = base_geom.n
    gj = gradient_jets(base_geom, base_geom.alpha_jets)
    gvals = np.stack([j.value for j in gj], axis=-1)
    dg = np.stack(
        [np.stack([gj[k].partial(i).value for i in range(n)], axis=-1) for k in range(n)],
        axis=-2,
    )  # [..., k, i]
    return dg + np.einsum("...kil,...l->...ki", deformed_geom.gamma, gvals)


def oracle_sectional(deformed_geom: ChartGeometry, X, Y) -> np.ndarray:
    """Sectional curvature from the curvature-tensor quotient.

    K(X, Y) = g(R(X, Y)Y, X) / (g(X, X) g(Y, Y) - g(X, Y)^2) for the deformed
    metric, with R from the assembled components.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    g = deformed_geom.g
    ryy = np.einsum("...lijk,...i,...j,...k->...l", deformed_geom.riemann, X, Y, Y)
    num = np.einsum("...ij,...i,...j->...", g, ryy, X)
    gxx = np.einsum("...ij,...i,...j->...", g, X, X)
    gyy = np.einsum("...ij,...i,...j->...", g, Y, Y)
    gxy = np.einsum("...ij,...i,...j->...", g, X, Y)
    return num / (gxx * gyy - gxy**2)


def oracle_identity_tension(source_geom: ChartGeometry, target_geom: ChartGeometry) -> np.ndarray:
    """Tension of the identity map: tau^c = gs^ij (Gt^c_ij - Gs^c_ij)."""
    return np.einsum(
        "...ij,...cij->...c",
        source_geom.g_inv,
        target_geom.gamma - source_geom.gamma,
    )


def oracle_tension(map_spec: MapSpec, points, deformed: str | None = None) -> np.ndarray:
    """Definition-based tension of a general map.

    tau^c = gs^ij (d_i d_j phi^c - Gs^k_ij d_k phi^c
                   + Gt^c_mn(phi) d_i phi^m d_j phi^n),
    with the source/target metrics deformed as tagged (overridable).
    """
    mg = MapGeometry(map_spec, points, deformed=deformed)
    return base_tension(mg, mg.source_geometry, mg.target_geometry)


def identity_bitension_from_geometries(source_geom: ChartGeometry,
                                       target_geom: ChartGeometry) -> np.ndarray:
    """Bitension of the identity map from definitions.

    tau2 = Delta^phi tau - Tr_gs R^T(tau, .) . with
    Delta^phi tau = -gs^ij ( d_i (D_j tau) + Gt (D_j tau) - Gs^k_ij D_k tau ),
    D_j tau = d_j tau + Gt tau. The tension itself is differentiated as an
    exact jet, so no finite differences enter.
    """
    n = source_geom.n
    gs_inv_jets = source_geom.g_inv_jets
    gt_gam = target_geom.gamma_jets
    gs_gam = source_geom.gamma_jets

    # tension as order-2 jets
    tau = []
    for c in range(n):
        acc = None
        for i in range(n):
            for j in range(n):
                term = gs_inv_jets[i][j] * (gt_gam[c][i][j] - gs_gam[c][i][j])
                acc = term if acc is None else acc + term
        tau.append(acc)
    tau_vals = np.stack([t.value for t in tau], axis=-1)

    # pull-back first covariant derivative (target connection), order-1 jets
    dtau = [[None] * n for _ in range(n)]
    for c in range(n):
        for j in range(n):
            acc = tau[c].partial(j)
            for nu in range(n):
                acc = acc + gt_gam[c][j][nu] * tau[nu]
            dtau[c][j] = acc
    dtau_vals = np.stack(
        [np.stack([dtau[c][j].value for j in range(n)], axis=-1) for c in range(n)],
        axis=-2,
    )  # [..., c, j]
    ddtau = np.stack(
        [
            np.stack(
                [
                    np.stack([dtau[c][j].partial(i).value for i in range(n)], axis=-1)
                    for j in range(n)
                ],
                axis=-2,
            )
            for c in range(n)
        ],
        axis=-3,
    )  # [..., c, j, i]

    gt_gamma = target_geom.gamma
    gs_gamma = source_geom.gamma
    second = (
        np.swapaxes(ddtau, -1, -2)  # [..., c, i, j]
        + np.einsum("...cin,...nj->...cij", gt_gamma, dtau_vals)
        - np.einsum("...kij,...ck->...cij", gs_gamma, dtau_vals)
    )
    rough = -np.einsum("...ij,...cij->...c", source_geom.g_inv, second)

    curv = np.einsum(
        "...ij,...caij,...a->...c", source_geom.g_inv, target_geom.riemann, tau_vals
    )
    return rough - curv


def oracle_bitension(spec: ManifoldSpec, points, direction: str) -> np.ndarray:
    """Bitension of the identity map in either deformation direction."""
    if direction == "to-deformed":
        src = ChartGeometry(spec, points, "base")
        tgt = ChartGeometry(spec, points, "deformed")
    elif direction == "from-deformed":
        src = ChartGeometry(spec, points, "deformed")
        tgt = ChartGeometry(spec, points, "base")
    else:
        raise ValueError(f"direction must be 'to-deformed' or 'from-deformed', got {direction!r}")
    return identity_bitension_from_geometries(src, tgt)
