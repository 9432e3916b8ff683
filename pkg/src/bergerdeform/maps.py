"""Tension and bitension fields for maps involving the deformed metric.

Covered closed forms, for a chart (M^2m, F, g, V, alpha) with deformation
g^a and a Riemannian chart (N, h):

* identity (M, g) -> (M, g^a):      tau = (1 - 2m)/(2a) grad a, plus its
  bitension (rough Laplacian of tau minus the curvature trace);
* identity (M, g^a) -> (M, g):      tau = (m - 1)/a^2 grad a, plus bitension;
* a general map phi: (N, h) -> (M, g^a)   ("to-deformed" target);
* a general map phi: (M, g^a) -> (N, h)   ("from-deformed" source);
* pointwise energy density of a map with either side deformed.

Sign convention for the rough Laplacian on the pull-back bundle:
Delta^phi W = -Tr_g (nabla^phi nabla^phi - nabla^phi_nabla) W. Pull-back
covariant derivatives use the target connection along the map, the
correction term uses the source connection, and the trace uses the source
metric of the situation at hand.

The identity-map closed forms evaluate on a :class:`DeformationContext`;
their independent counterparts live in :mod:`bergerdeform.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import ChartGeometry
from .deform import DeformationContext, build_context, sym_bilinear
from .manifolds import ManifoldSpec, MapSpec
from .mapgeom import MapGeometry, base_tension
from .oracle import oracle_tension
from .sampling import sample_points

__all__ = [
    "MapGeometry",
    "TensionValue",
    "HarmonicityResult",
    "BiharmonicityResult",
    "tension_identity_to_deformed",
    "tension_identity_from_deformed",
    "bitension_identity_to_deformed",
    "bitension_identity_from_deformed",
    "tension_map_to_deformed",
    "tension_map_from_deformed",
    "energy_density",
    "identity_harmonicity",
    "map_harmonicity",
    "classify_biharmonic",
]

HARMONIC_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class TensionValue:
    """A tension vector at one point with its target-metric norm."""

    components: np.ndarray
    norm: float


@dataclass(frozen=True)
class HarmonicityResult:
    harmonic: bool
    residual: float
    reason: str = ""

    @property
    def classification(self) -> str:
        return "harmonic" if self.harmonic else "not harmonic"


@dataclass(frozen=True)
class BiharmonicityResult:
    classification: str  # "harmonic" | "proper-biharmonic" | "not-biharmonic"
    tension_residual: float
    bitension_residual: float


# -- identity-map closed forms ---------------------------------------------------


def tension_identity_to_deformed(ctx: DeformationContext) -> np.ndarray:
    """Tension of the identity (M, g) -> (M, g^a): (1 - 2m)/(2a) grad a."""
    coeff = (1.0 - 2 * ctx.m) / (2.0 * ctx.alpha)
    return coeff[..., None] * ctx.grad


def tension_identity_from_deformed(ctx: DeformationContext) -> np.ndarray:
    """Tension of the identity (M, g^a) -> (M, g): (m - 1)/a^2 grad a."""
    coeff = (ctx.m - 1) / ctx.alpha**2
    return coeff[..., None] * ctx.grad


def bitension_identity_to_deformed(ctx: DeformationContext) -> np.ndarray:
    """Bitension of the identity (M, g) -> (M, g^a).

    (1-2m)/(2a) [ Delta grad a - Ricci(grad a)
                  + (2m-1)/(2a) nabla_grad grad a
                  - ((2m+3)|grad a|^2/(4a^2) - 2 Lap a / a) grad a
                  - nabla_FV nabla_FV grad a ]
    """
    a = ctx.alpha
    m = ctx.m
    gn = ctx.grad_norm_sq
    ngg = np.einsum("...ki,...i->...k", ctx.nabla_grad, ctx.grad)
    ric_g = np.einsum("...ki,...i->...k", ctx.ricci_op, ctx.grad)
    bracket = (
        ctx.delta_grad
        - ric_g
        + ((2 * m - 1) / (2.0 * a))[..., None] * ngg
        - ((2 * m + 3) * gn / (4.0 * a**2) - 2.0 * ctx.laplacian / a)[..., None] * ctx.grad
        - ctx.nabla_fv_fv_grad
    )
    return ((1.0 - 2 * m) / (2.0 * a))[..., None] * bracket


def bitension_identity_from_deformed(ctx: DeformationContext) -> np.ndarray:
    """Bitension of the identity (M, g^a) -> (M, g); identically 0 when m = 1.

    (m-1)/a^3 [ Delta grad a - Ricci(grad a)
                - (m-5)/a nabla_grad grad a
                + 2 ((m-4)|grad a|^2/a^2 + Lap a / a) grad a
                - 1/2 nabla_FV nabla_FV grad a ]
    """
    m = ctx.m
    if m == 1:
        return np.zeros_like(ctx.grad)
    a = ctx.alpha
    gn = ctx.grad_norm_sq
    ngg = np.einsum("...ki,...i->...k", ctx.nabla_grad, ctx.grad)
    ric_g = np.einsum("...ki,...i->...k", ctx.ricci_op, ctx.grad)
    bracket = (
        ctx.delta_grad
        - ric_g
        - ((m - 5) / a)[..., None] * ngg
        + (2.0 * ((m - 4) * gn / a**2 + ctx.laplacian / a))[..., None] * ctx.grad
        - 0.5 * ctx.nabla_fv_fv_grad
    )
    return ((m - 1) / a**3)[..., None] * bracket


# -- general maps -----------------------------------------------------------------


def energy_density(map_spec: MapSpec, points) -> np.ndarray:
    """Pointwise energy density e(phi) = 1/2 g^ij h_cd d_i phi^c d_j phi^d."""
    mg = MapGeometry(map_spec, points)
    return 0.5 * np.einsum(
        "...ij,...cd,...ci,...dj->...",
        mg.source_geometry.g_inv,
        mg.target_geometry.g,
        mg.dphi,
        mg.dphi,
    )


def tension_map_to_deformed(map_spec: MapSpec, points) -> np.ndarray:
    """Closed-form tension of phi: (N, h) -> (M, g^a).

    tau^a(phi) = tau(phi) + (1/a) dphi(grad^N (a o phi))
                 - 1/(2 a^2) Tr_h g^a(dphi, dphi) grad^M a,
    with tau(phi) the tension toward the undeformed target metric and both
    gradients taken with the base metrics.
    """
    if map_spec.deformed != "target":
        raise ValueError("map must be tagged deformed='target'")
    mg = MapGeometry(map_spec, points)
    src = ChartGeometry(map_spec.source, mg.points, "base")
    tgt_base = ChartGeometry(map_spec.target, mg.image, "base", check_domain=False)
    tgt_def = mg.target_geometry  # deformed

    tau0 = oracle_tension(map_spec, mg.points, deformed="none")

    alpha = tgt_base.alpha_jets.value
    dalpha = np.stack(
        [tgt_base.alpha_jets.partial(i).value for i in range(mg.nt)], axis=-1
    )
    # grad of the pulled-back factor on the source, pushed forward
    dpull = np.einsum("...m,...mi->...i", dalpha, mg.dphi)
    grad_pull = np.einsum("...ij,...j->...i", src.g_inv, dpull)
    push = np.einsum("...ci,...i->...c", mg.dphi, grad_pull)

    trace = np.einsum(
        "...ij,...cd,...ci,...dj->...", src.g_inv, tgt_def.g, mg.dphi, mg.dphi
    )
    grad_target = np.einsum("...cd,...d->...c", tgt_base.g_inv, dalpha)

    return (
        tau0
        + (1.0 / alpha)[..., None] * push
        - (trace / (2.0 * alpha**2))[..., None] * grad_target
    )


def tension_map_from_deformed(map_spec: MapSpec, points) -> np.ndarray:
    """Closed-form tension of phi: (M, g^a) -> (N, h).

    tau^a(phi) = (1/a) tau(phi) - 1/(2a) nabla^phi_FV dphi(FV)
                 + (m-1)/a^2 dphi(grad a).
    """
    if map_spec.deformed != "source":
        raise ValueError("map must be tagged deformed='source'")
    mg = MapGeometry(map_spec, points)
    src_base = ChartGeometry(map_spec.source, mg.points, "base")
    tgt = ChartGeometry(map_spec.target, mg.image, "base", check_domain=False)
    ctx = build_context(map_spec.source, mg.points, geometry=src_base)

    tau0 = oracle_tension(map_spec, mg.points, deformed="none")

    # w = dphi(FV) as order-2 jets on the source
    fv_jets = src_base.fv_jets
    w = []
    for c in range(mg.nt):
        acc = None
        for i in range(mg.ns):
            term = mg.phi_jets[c].partial(i) * fv_jets[i]
            acc = term if acc is None else acc + term
        w.append(acc)
    wv = np.stack([j.value for j in w], axis=-1)
    dw = np.stack(
        [
            np.stack([w[c].partial(i).value for i in range(mg.ns)], axis=-1)
            for c in range(mg.nt)
        ],
        axis=-2,
    )  # [..., c, i]
    nabla_w = np.einsum("...i,...ci->...c", ctx.fv, dw) + np.einsum(
        "...i,...cmn,...mi,...n->...c", ctx.fv, tgt.gamma, mg.dphi, wv
    )

    push_grad = np.einsum("...ci,...i->...c", mg.dphi, ctx.grad)
    a = ctx.alpha
    return (
        (1.0 / a)[..., None] * tau0
        - (1.0 / (2.0 * a))[..., None] * nabla_w
        + ((ctx.m - 1) / a**2)[..., None] * push_grad
    )


# -- harmonicity / biharmonicity ----------------------------------------------------


def _target_norms(metric: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(sym_bilinear(metric, vecs, vecs), 0.0))


def identity_harmonicity(spec: ManifoldSpec, direction: str,
                         n_samples: int = 200, seed: int = 42,
                         tol: float = HARMONIC_TOL) -> HarmonicityResult:
    """Classify the identity map in the given deformation direction."""
    points = sample_points(spec.domain, n_samples, seed)
    ctx = build_context(spec, points)
    if direction == "to-deformed":
        tau = tension_identity_to_deformed(ctx)
        norms = _target_norms(ctx.deformed, tau)
    elif direction == "from-deformed":
        tau = tension_identity_from_deformed(ctx)
        norms = _target_norms(ctx.g, tau)
    else:
        raise ValueError(f"direction must be 'to-deformed' or 'from-deformed', got {direction!r}")
    residual = float(np.max(norms))
    harmonic = residual <= tol
    reason = ""
    if harmonic:
        if direction == "from-deformed" and spec.m == 1:
            reason = "dim M = 2"
        else:
            reason = "alpha is constant"
    return HarmonicityResult(harmonic=harmonic, residual=residual, reason=reason)


def map_harmonicity(map_spec: MapSpec, n_samples: int = 200, seed: int = 42,
                    tol: float = HARMONIC_TOL) -> HarmonicityResult:
    """Classify a general map using the closed-form deformed tension."""
    points = sample_points(map_spec.source.domain, n_samples, seed)
    if map_spec.deformed == "target":
        tau = tension_map_to_deformed(map_spec, points)
        mg = MapGeometry(map_spec, points)
        norms = _target_norms(mg.target_geometry.g, tau)
    elif map_spec.deformed == "source":
        tau = tension_map_from_deformed(map_spec, points)
        mg = MapGeometry(map_spec, points)
        norms = _target_norms(mg.target_geometry.g, tau)
    else:
        mg = MapGeometry(map_spec, points)
        tau = base_tension(mg, mg.source_geometry, mg.target_geometry)
        norms = _target_norms(mg.target_geometry.g, tau)
    residual = float(np.max(norms))
    return HarmonicityResult(harmonic=residual <= tol, residual=residual)


def classify_biharmonic(spec: ManifoldSpec, direction: str,
                        n_samples: int = 200, seed: int = 42,
                        tol: float = HARMONIC_TOL) -> BiharmonicityResult:
    """Classify the identity map as harmonic / proper-biharmonic / not-biharmonic.

    Proper biharmonicity requires a non-vanishing tension together with a
    vanishing bitension; with the deformed source this forces m != 1 and a
    non-constant alpha automatically, since either one makes the map harmonic.
    """
    points = sample_points(spec.domain, n_samples, seed)
    ctx = build_context(spec, points)
    if direction == "to-deformed":
        tau = tension_identity_to_deformed(ctx)
        tau2 = bitension_identity_to_deformed(ctx)
        metric = ctx.deformed
    elif direction == "from-deformed":
        tau = tension_identity_from_deformed(ctx)
        tau2 = bitension_identity_from_deformed(ctx)
        metric = ctx.g
    else:
        raise ValueError(f"direction must be 'to-deformed' or 'from-deformed', got {direction!r}")
    t_res = float(np.max(_target_norms(metric, tau)))
    b_res = float(np.max(_target_norms(metric, tau2)))
    if t_res <= tol:
        label = "harmonic"
    elif b_res <= tol:
        label = "proper-biharmonic"
    else:
        label = "not-biharmonic"
    return BiharmonicityResult(
        classification=label, tension_residual=t_res, bitension_residual=b_res
    )
